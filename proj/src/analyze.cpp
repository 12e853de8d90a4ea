#include "ulo/analyze.hpp"

#include <cmath>
#include <map>

#include "ulo/csvio.hpp"
#include "ulo/logic.hpp"
#include "ulo/svg.hpp"

namespace ulo {
namespace {

const std::map<std::string, std::string>& op_colors() {
  static const std::map<std::string, std::string> colors = {
      {"and", "#d62728"},  {"nand", "#ff9896"}, {"or", "#1f77b4"},
      {"nor", "#aec7e8"},  {"xor", "#2ca02c"},  {"xnor", "#98df8a"},
      {"mp", "#9467bd"},   {"nmp", "#c5b0d5"},  {"unassigned", "#7f7f7f"},
  };
  return colors;
}

}  // namespace

SnapshotStats snapshot_stats(const LogicSnapshot& snap, double tolerance_rad) {
  SnapshotStats st;
  st.epoch = snap.epoch;
  for (const auto& e : snap.entries) {
    ++st.entries;
    st.mean_abs_alpha_hat += std::fabs(e.alpha_hat);
    st.mean_abs_beta_hat += std::fabs(e.beta_hat);
    st.mean_abs_gamma_hat += std::fabs(e.gamma_hat);
    st.mean_angle_rad += e.angle_rad;
    const OpParams p{e.alpha, e.beta, e.gamma};
    try {
      if (classify_nearest(p, tolerance_rad).op) {
        ++st.assigned;
      } else {
        ++st.unassigned;
      }
    } catch (const DegenerateError&) {
      ++st.unassigned;
    }
  }
  if (st.entries > 0) {
    st.mean_abs_alpha_hat /= static_cast<double>(st.entries);
    st.mean_abs_beta_hat /= static_cast<double>(st.entries);
    st.mean_abs_gamma_hat /= static_cast<double>(st.entries);
    st.mean_angle_rad /= static_cast<double>(st.entries);
  }
  return st;
}

AnalyzeResult analyze_snapshots(const std::string& snapshot_csv,
                                const std::string& out_dir,
                                double tolerance_rad) {
  const auto snapshots = read_snapshots_csv(snapshot_csv);
  AnalyzeResult result;

  CsvTable hist;
  hist.header = {"epoch", "operator", "count", "unassigned_count"};
  CsvTable summary;
  summary.header = {"epoch",
                    "entries",
                    "mean_abs_alpha_hat",
                    "mean_abs_beta_hat",
                    "mean_abs_gamma_hat",
                    "mean_angle_rad",
                    "assigned",
                    "unassigned"};

  for (const auto& snap : snapshots) {
    std::map<std::string, int64_t> counts;
    for (OpKind kind : kAllKinds) {
      counts[op_name({kind, Polarity::Positive})] = 0;
      counts[op_name({kind, Polarity::Negated})] = 0;
    }
    int64_t unassigned = 0;
    std::vector<ScatterPoint> points;
    points.reserve(snap.entries.size());
    for (const auto& e : snap.entries) {
      std::string bucket = "unassigned";
      const OpParams p{e.alpha, e.beta, e.gamma};
      try {
        const NearestOp nearest = classify_nearest(p, tolerance_rad);
        if (nearest.op) {
          bucket = op_name(*nearest.op);
          ++counts[bucket];
        } else {
          ++unassigned;
        }
      } catch (const DegenerateError&) {
        ++unassigned;
      }
      ScatterPoint pt;
      pt.x = e.alpha_hat;
      pt.y = e.gamma_hat;
      pt.radius_px = 1.5 + 5.0 * std::fabs(e.beta_hat);
      pt.color = op_colors().at(bucket);
      points.push_back(pt);
    }

    // one row per operator class, with the epoch's unassigned total repeated
    for (OpKind kind : kAllKinds) {
      for (Polarity pol : {Polarity::Positive, Polarity::Negated}) {
        const std::string name = op_name({kind, pol});
        hist.rows.push_back({std::to_string(snap.epoch), name,
                             std::to_string(counts[name]),
                             std::to_string(unassigned)});
      }
    }

    const SnapshotStats st = snapshot_stats(snap, tolerance_rad);
    summary.rows.push_back(
        {std::to_string(st.epoch), std::to_string(st.entries),
         fmt_double(st.mean_abs_alpha_hat), fmt_double(st.mean_abs_beta_hat),
         fmt_double(st.mean_abs_gamma_hat), fmt_double(st.mean_angle_rad),
         std::to_string(st.assigned), std::to_string(st.unassigned)});

    const std::string svg_path =
        out_dir + "/scatter_epoch_" + std::to_string(snap.epoch) + ".svg";
    write_scatter_svg(svg_path, "logic parameters, epoch " +
                                     std::to_string(snap.epoch),
                      "alpha_hat", "gamma_hat", points);
    result.files_written.push_back(svg_path);
  }

  const std::string hist_path = out_dir + "/op_histogram.csv";
  write_csv(hist_path, hist);
  result.files_written.push_back(hist_path);
  const std::string summary_path = out_dir + "/summary.csv";
  write_csv(summary_path, summary);
  result.files_written.push_back(summary_path);
  return result;
}

}  // namespace ulo
