#include "ulo/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

namespace ulo {

RunConfig RunConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config " + path + ": expected an object");

  static const std::set<std::string> known = {
      "train_images", "train_labels", "test_images", "test_labels",
      "out_dir",      "operator",     "logic_init",  "epochs",
      "batch_size",   "base_lr",      "decayed_lr",  "lr_decay_epoch",
      "momentum",     "seed",         "snapshot_every_epochs", "deterministic"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) {
      throw ConfigError("config " + path + ": unknown key '" + key + "'");
    }
  }

  RunConfig cfg;
  try {
    cfg.train_images = j.value("train_images", cfg.train_images);
    cfg.train_labels = j.value("train_labels", cfg.train_labels);
    cfg.test_images = j.value("test_images", cfg.test_images);
    cfg.test_labels = j.value("test_labels", cfg.test_labels);
    cfg.out_dir = j.value("out_dir", cfg.out_dir);
    cfg.op = j.value("operator", cfg.op);
    cfg.logic_init = j.value("logic_init", cfg.logic_init);
    cfg.train.epochs = j.value("epochs", cfg.train.epochs);
    cfg.train.batch_size = j.value("batch_size", cfg.train.batch_size);
    cfg.train.base_lr = j.value("base_lr", cfg.train.base_lr);
    cfg.train.decayed_lr = j.value("decayed_lr", cfg.train.decayed_lr);
    cfg.train.lr_decay_epoch = j.value("lr_decay_epoch", cfg.train.lr_decay_epoch);
    cfg.train.momentum = j.value("momentum", cfg.train.momentum);
    cfg.train.seed = j.value("seed", cfg.train.seed);
    cfg.train.snapshot_every_epochs =
        j.value("snapshot_every_epochs", cfg.train.snapshot_every_epochs);
    cfg.train.deterministic = j.value("deterministic", cfg.train.deterministic);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  return cfg;
}

LogicMode RunConfig::logic_mode() const {
  if (op == "ulo") {
    if (logic_init == "random") {
      return LogicMode::learnable(LogicInit::random());
    }
    const auto kind = kind_from_name(logic_init);
    if (!kind) {
      throw ConfigError("unknown logic_init '" + logic_init +
                        "' (expected random, and, or, xor, mp)");
    }
    return LogicMode::learnable(
        LogicInit::as_operator({*kind, Polarity::Positive}));
  }
  const auto kind = kind_from_name(op);
  if (!kind) {
    throw ConfigError("unknown operator '" + op +
                      "' (expected ulo, and, or, xor, mp)");
  }
  return LogicMode::fixed({*kind, Polarity::Positive});
}

void RunConfig::check_paths() const {
  for (const std::string* p :
       {&train_images, &train_labels, &test_images, &test_labels}) {
    if (p->empty()) {
      throw ConfigError("dataset path missing in configuration");
    }
    if (!std::filesystem::exists(*p)) {
      throw ConfigError("dataset not found: " + *p);
    }
  }
}

}  // namespace ulo
