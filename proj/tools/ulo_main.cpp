// ulo: training, evaluation and operator-analysis command line.
//
// Subcommands: train, eval, analyze, decompose, truth-table.
// Exit codes: 0 success, 1 internal error, 2 usage/config error.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ulo/analyze.hpp"
#include "ulo/checkpoint.hpp"
#include "ulo/config.hpp"
#include "ulo/csvio.hpp"
#include "ulo/data.hpp"
#include "ulo/logic.hpp"
#include "ulo/train.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;

struct GlobalFlags {
  std::string config_path;
  std::string out_dir;
  bool has_out = false;
  uint64_t seed = 0;
  bool has_seed = false;
  bool deterministic = false;
};

ulo::RunConfig resolve_config(const GlobalFlags& g) {
  ulo::RunConfig cfg;
  if (!g.config_path.empty()) {
    cfg = ulo::RunConfig::from_json_file(g.config_path);
  }
  if (g.has_out) cfg.out_dir = g.out_dir;
  if (g.has_seed) cfg.train.seed = g.seed;
  if (g.deterministic) cfg.train.deterministic = true;
  return cfg;
}

std::vector<std::pair<std::string, const ulo::Tensor*>> to_const_view(
    const std::vector<std::pair<std::string, ulo::Tensor*>>& v) {
  std::vector<std::pair<std::string, const ulo::Tensor*>> out;
  out.reserve(v.size());
  for (const auto& [name, t] : v) out.emplace_back(name, t);
  return out;
}

int cmd_train(const GlobalFlags& g, const std::string& op_flag,
              const std::string& init_flag) {
  ulo::RunConfig cfg = resolve_config(g);
  if (!op_flag.empty()) cfg.op = op_flag;        // flags beat the file
  if (!init_flag.empty()) cfg.logic_init = init_flag;
  const ulo::LogicMode mode = cfg.logic_mode();  // validates names
  cfg.check_paths();
  std::filesystem::create_directories(cfg.out_dir);

  const ulo::MnistDataset train_set =
      ulo::load_mnist(cfg.train_images, cfg.train_labels);
  const ulo::MnistDataset test_set =
      ulo::load_mnist(cfg.test_images, cfg.test_labels);

  ulo::Network net = ulo::build_mnist_net(mode, cfg.train.seed);
  const ulo::TrainLog log = ulo::train(net, train_set, test_set, cfg.train);

  ulo::write_metrics_csv(cfg.out_dir + "/metrics.csv", log);
  ulo::write_snapshots_csv(cfg.out_dir + "/logic_snapshots.csv", log.snapshots);
  ulo::save_checkpoint(cfg.out_dir + "/checkpoint.ulo",
                       to_const_view(net.state_tensors()));
  if (!log.records.empty()) {
    std::printf("final test accuracy: %.4f\n", log.records.back().test_acc);
  }
  std::printf("artifacts written to %s\n", cfg.out_dir.c_str());
  return kExitOk;
}

int cmd_eval(const GlobalFlags& g, const std::string& checkpoint,
             std::string images, std::string labels) {
  ulo::RunConfig cfg = resolve_config(g);
  if (images.empty()) images = cfg.test_images;
  if (labels.empty()) labels = cfg.test_labels;
  if (images.empty() || labels.empty()) {
    throw ulo::ConfigError("eval needs --images/--labels or --config with test paths");
  }
  for (const auto& p : {checkpoint, images, labels}) {
    if (!std::filesystem::exists(p)) {
      throw ulo::ConfigError("dataset not found: " + p);
    }
  }
  // The checkpoint carries every tensor including the logic triples, so the
  // construction mode only shapes the tensor set.
  ulo::Network net = ulo::build_mnist_net(
      ulo::LogicMode::fixed({ulo::OpKind::And, ulo::Polarity::Positive}), 0);
  ulo::load_checkpoint_into(checkpoint, net.state_tensors());
  const ulo::MnistDataset data = ulo::load_mnist(images, labels);
  std::printf("%.4f\n", ulo::evaluate(net, data));
  return kExitOk;
}

int cmd_analyze(const GlobalFlags& g, const std::string& snapshots,
                double tolerance) {
  ulo::RunConfig cfg = resolve_config(g);
  std::filesystem::create_directories(cfg.out_dir);
  const auto result = ulo::analyze_snapshots(snapshots, cfg.out_dir, tolerance);
  for (const auto& f : result.files_written) std::printf("%s\n", f.c_str());
  return kExitOk;
}

int cmd_decompose(double alpha, double beta, double gamma, bool verify) {
  const ulo::OpParams p{alpha, beta, gamma};
  const ulo::Decomposition d = ulo::decompose(p);
  std::printf("(%s, %s, %s) = %s*AND + %s*MP + %s*OR\n",
              ulo::fmt_double(alpha).c_str(), ulo::fmt_double(beta).c_str(),
              ulo::fmt_double(gamma).c_str(), ulo::fmt_double(d.a_and).c_str(),
              ulo::fmt_double(d.c_mp).c_str(), ulo::fmt_double(d.c_or).c_str());
  try {
    const ulo::NearestOp nearest = ulo::classify_nearest(p, 0.1);
    if (nearest.op) {
      std::printf("nearest operator: %s (%.4f rad)\n",
                  ulo::op_name(*nearest.op).c_str(), nearest.angle_rad);
    } else {
      std::printf("nearest operator: none within 0.1 rad (closest %.4f rad)\n",
                  nearest.angle_rad);
    }
  } catch (const ulo::DegenerateError&) {
    std::printf("nearest operator: degenerate (zero vector)\n");
  }
  if (verify) {
    const ulo::OpParams r = ulo::recompose(d);
    const double residual =
        std::max({std::fabs(r.alpha - alpha), std::fabs(r.beta - beta),
                  std::fabs(r.gamma - gamma)});
    std::printf("recomposition residual: %s\n", ulo::fmt_double(residual).c_str());
    if (!(residual < 1e-12)) {
      std::fprintf(stderr, "recomposition residual exceeds 1e-12\n");
      return kExitInternal;
    }
  }
  return kExitOk;
}

int cmd_truth_table(const std::string& name) {
  std::string base = name;
  ulo::Polarity pol = ulo::Polarity::Positive;
  if (name == "xnor") {
    base = "xor";
    pol = ulo::Polarity::Negated;
  } else if (name.size() > 1 && name[0] == 'n' && name != "nop") {
    base = name.substr(1);
    pol = ulo::Polarity::Negated;
  }
  const auto kind = ulo::kind_from_name(base);
  if (!kind) {
    throw CLI::ValidationError("truth-table",
                               "unknown operator '" + name +
                                   "' (valid: and, or, xor, mp, nand, nor, "
                                   "xnor, nmp)");
  }
  const ulo::PrescribedOp op{*kind, pol};
  const auto [params, b] = ulo::prescribed_params(op);
  std::printf("%s: alpha=%s beta=%s gamma=%s b=%s\n", ulo::op_name(op).c_str(),
              ulo::fmt_double(params.alpha).c_str(),
              ulo::fmt_double(params.beta).c_str(),
              ulo::fmt_double(params.gamma).c_str(), ulo::fmt_double(b).c_str());
  for (const auto& entry : ulo::truth_table(op)) {
    std::printf("U(%g, %g) = %s\n", entry.x, entry.y,
                ulo::fmt_double(entry.value).c_str());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"universal logic operator toolkit"};
  app.require_subcommand(1);

  GlobalFlags g;
  app.add_option("--config", g.config_path, "JSON run configuration");
  auto* out_opt = app.add_option("--out", g.out_dir, "output directory");
  auto* seed_opt = app.add_option("--seed", g.seed, "RNG seed override");
  app.add_flag("--deterministic", g.deterministic,
               "byte-reproducible outputs (zeroes wall-clock fields)");

  auto* train = app.add_subcommand("train", "train a classifier");
  std::string op_flag, init_flag;
  train->add_option("--operator", op_flag, "ulo, and, or, xor or mp");
  train->add_option("--logic-init", init_flag,
                    "learnable-mode init: random, and, or, xor or mp");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string checkpoint, images, labels;
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  eval->add_option("--images", images, "IDX image file");
  eval->add_option("--labels", labels, "IDX label file");

  auto* analyze = app.add_subcommand("analyze", "operator analysis of snapshots");
  std::string snapshots;
  double tolerance = ulo::kDefaultClassifyTolerance;
  analyze->add_option("--snapshots", snapshots, "logic_snapshots.csv")->required();
  analyze->add_option("--tolerance", tolerance, "classification tolerance, radians");

  auto* decompose = app.add_subcommand("decompose",
                                       "decompose a parameter triple over AND/MP/OR");
  double alpha = 0, beta = 0, gamma = 0;
  bool verify = false;
  decompose->add_option("-a,--alpha", alpha, "alpha")->required();
  decompose->add_option("-b,--beta", beta, "beta")->required();
  decompose->add_option("-g,--gamma", gamma, "gamma")->required();
  decompose->add_flag("--verify", verify, "check recomposition residual");

  auto* tt = app.add_subcommand("truth-table", "Boolean-corner table of an operator");
  std::string op_name_arg;
  tt->add_option("operator", op_name_arg, "and, or, xor, mp or a negated form")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  g.has_out = out_opt->count() > 0;
  g.has_seed = seed_opt->count() > 0;

  try {
    if (*train) return cmd_train(g, op_flag, init_flag);
    if (*eval) return cmd_eval(g, checkpoint, images, labels);
    if (*analyze) return cmd_analyze(g, snapshots, tolerance);
    if (*decompose) return cmd_decompose(alpha, beta, gamma, verify);
    if (*tt) return cmd_truth_table(op_name_arg);
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const ulo::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const ulo::FormatError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kExitInternal;
  }
  return kExitUsage;
}
