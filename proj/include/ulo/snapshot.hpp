#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ulo/network.hpp"

namespace ulo {

// One kernel's logical parameters at a given epoch: the raw triple, its
// length-normalized direction, and the nearest prescribed operator.
struct SnapshotEntry {
  std::string layer;
  int64_t kernel = 0;
  double alpha = 0, beta = 0, gamma = 0;
  double alpha_hat = 0, beta_hat = 0, gamma_hat = 0;
  std::string nearest_op = "none";   // and|or|xor|mp|none|degenerate
  std::string polarity = "none";     // positive|negated|none
  double angle_rad = 0;
};

struct LogicSnapshot {
  int64_t epoch = 0;
  std::vector<SnapshotEntry> entries;
};

inline constexpr double kDefaultClassifyTolerance = 0.1;  // radians

LogicSnapshot take_snapshot(const Network& net, int64_t epoch,
                            double tolerance_rad = kDefaultClassifyTolerance);

// logic_snapshots.csv: epoch,layer,kernel,alpha,beta,gamma,alpha_hat,
// beta_hat,gamma_hat,nearest_op,polarity,angle_rad
void write_snapshots_csv(const std::string& path,
                         const std::vector<LogicSnapshot>& snapshots);
std::vector<LogicSnapshot> read_snapshots_csv(const std::string& path);

}  // namespace ulo
