#include "ulo/snapshot.hpp"

#include "ulo/csvio.hpp"
#include "ulo/logic.hpp"

namespace ulo {

LogicSnapshot take_snapshot(const Network& net, int64_t epoch,
                            double tolerance_rad) {
  LogicSnapshot snap;
  snap.epoch = epoch;
  for (const auto& [layer, logic] : net.logic_tensors()) {
    const int64_t kernels = logic->dim(0);
    for (int64_t k = 0; k < kernels; ++k) {
      SnapshotEntry e;
      e.layer = layer;
      e.kernel = k;
      e.alpha = (*logic)[k * 3 + 0];
      e.beta = (*logic)[k * 3 + 1];
      e.gamma = (*logic)[k * 3 + 2];
      const OpParams p{e.alpha, e.beta, e.gamma};
      try {
        const auto hat = normalize(p);
        e.alpha_hat = hat[0];
        e.beta_hat = hat[1];
        e.gamma_hat = hat[2];
        const NearestOp nearest = classify_nearest(p, tolerance_rad);
        e.angle_rad = nearest.angle_rad;
        if (nearest.op) {
          e.nearest_op = kind_name(nearest.op->kind);
          e.polarity = nearest.op->polarity == Polarity::Positive ? "positive"
                                                                  : "negated";
        }
      } catch (const DegenerateError&) {
        e.nearest_op = "degenerate";
      }
      snap.entries.push_back(std::move(e));
    }
  }
  return snap;
}

void write_snapshots_csv(const std::string& path,
                         const std::vector<LogicSnapshot>& snapshots) {
  CsvTable table;
  table.header = {"epoch",     "layer",    "kernel",    "alpha",
                  "beta",      "gamma",    "alpha_hat", "beta_hat",
                  "gamma_hat", "nearest_op", "polarity", "angle_rad"};
  for (const auto& snap : snapshots) {
    for (const auto& e : snap.entries) {
      table.rows.push_back({std::to_string(snap.epoch), e.layer,
                            std::to_string(e.kernel), fmt_double(e.alpha),
                            fmt_double(e.beta), fmt_double(e.gamma),
                            fmt_double(e.alpha_hat), fmt_double(e.beta_hat),
                            fmt_double(e.gamma_hat), e.nearest_op, e.polarity,
                            fmt_double(e.angle_rad)});
    }
  }
  write_csv(path, table);
}

std::vector<LogicSnapshot> read_snapshots_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  const std::vector<std::string> expected = {
      "epoch",     "layer",    "kernel",    "alpha",    "beta",     "gamma",
      "alpha_hat", "beta_hat", "gamma_hat", "nearest_op", "polarity",
      "angle_rad"};
  if (table.header != expected) {
    throw FormatError(path + ": unexpected snapshot CSV header");
  }
  std::vector<LogicSnapshot> snapshots;
  for (const auto& row : table.rows) {
    const int64_t epoch = parse_int(row[0]);
    if (snapshots.empty() || snapshots.back().epoch != epoch) {
      snapshots.push_back({epoch, {}});
    }
    SnapshotEntry e;
    e.layer = row[1];
    e.kernel = parse_int(row[2]);
    e.alpha = parse_double(row[3]);
    e.beta = parse_double(row[4]);
    e.gamma = parse_double(row[5]);
    e.alpha_hat = parse_double(row[6]);
    e.beta_hat = parse_double(row[7]);
    e.gamma_hat = parse_double(row[8]);
    e.nearest_op = row[9];
    e.polarity = row[10];
    e.angle_rad = parse_double(row[11]);
    snapshots.back().entries.push_back(std::move(e));
  }
  return snapshots;
}

}  // namespace ulo
