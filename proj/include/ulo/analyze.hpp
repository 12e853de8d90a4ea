#pragma once

#include <string>
#include <vector>

#include "ulo/snapshot.hpp"

namespace ulo {

// Re-derives Fig.2-style material from a logic_snapshots.csv:
//  - op_histogram.csv    epoch,operator,count,unassigned_count
//  - summary.csv         per-epoch stats including mean |beta_hat|
//  - scatter_epoch_<e>.svg   (alpha_hat, gamma_hat) disk, radius ~ |beta_hat|
// Classification is redone from the raw triples at the given tolerance.
struct AnalyzeResult {
  std::vector<std::string> files_written;
};

AnalyzeResult analyze_snapshots(const std::string& snapshot_csv,
                                const std::string& out_dir,
                                double tolerance_rad = kDefaultClassifyTolerance);

// Summary statistics for one snapshot (also used by the acceptance suite).
struct SnapshotStats {
  int64_t epoch = 0;
  int64_t entries = 0;
  double mean_abs_alpha_hat = 0;
  double mean_abs_beta_hat = 0;
  double mean_abs_gamma_hat = 0;
  double mean_angle_rad = 0;
  int64_t assigned = 0;
  int64_t unassigned = 0;
};

SnapshotStats snapshot_stats(const LogicSnapshot& snap, double tolerance_rad);

}  // namespace ulo
