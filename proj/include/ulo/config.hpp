#pragma once

#include <string>

#include "ulo/layers.hpp"
#include "ulo/train.hpp"

namespace ulo {

// Run configuration: JSON file first, CLI flags override individual fields.
struct RunConfig {
  std::string train_images;
  std::string train_labels;
  std::string test_images;
  std::string test_labels;
  std::string out_dir = "out";
  std::string op = "ulo";           // ulo | and | or | xor | mp
  std::string logic_init = "random";  // random | and | or | xor | mp
  TrainConfig train;

  static RunConfig from_json_file(const std::string& path);

  // Throws ConfigError on unknown operator/init names or missing paths.
  LogicMode logic_mode() const;
  void check_paths() const;
};

}  // namespace ulo
