#include "ulo/train.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "ulo/csvio.hpp"
#include "ulo/ops.hpp"

namespace ulo {
namespace {

// The per-batch graphs allocate and free a few hundred MB of im2col
// buffers. Keeping large blocks on the heap instead of mmap avoids
// refaulting those pages every batch.
void tune_allocator() {
#if defined(__GLIBC__)
  static const bool done = [] {
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
    return true;
  }();
  (void)done;
#endif
}

Tensor gather_batch(const Tensor& images, const std::vector<int64_t>& order,
                    int64_t start, int64_t count) {
  const int64_t img = images.numel() / images.dim(0);
  Tensor out = Tensor::uninit({count, images.dim(1), images.dim(2), images.dim(3)});
  for (int64_t i = 0; i < count; ++i) {
    std::memcpy(out.data() + i * img, images.data() + order[start + i] * img,
                sizeof(double) * static_cast<size_t>(img));
  }
  return out;
}

int64_t argmax_row(const Tensor& logits, int64_t row) {
  const int64_t c = logits.dim(1);
  int64_t best = 0;
  for (int64_t j = 1; j < c; ++j) {
    if (logits.at2(row, j) > logits.at2(row, best)) best = j;
  }
  return best;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(base_lr > 0) || !(decayed_lr > 0) || decayed_lr > base_lr) {
    throw ConfigError("need 0 < decayed_lr <= base_lr");
  }
  if (momentum < 0 || momentum >= 1) throw ConfigError("momentum must be in [0,1)");
  if (snapshot_every_epochs < 1) {
    throw ConfigError("snapshot_every_epochs must be >= 1");
  }
}

TrainLog train(Network& net, const MnistDataset& train_set,
               const MnistDataset& test_set, const TrainConfig& config) {
  config.validate();
  if (train_set.size() == 0) throw ContractError("train: empty training set");
  tune_allocator();

  TrainLog log;
  log.snapshots.push_back(take_snapshot(net, 0));

  const auto params = net.parameters();
  Rng shuffle_rng = Rng::derive(config.seed, 0x73687566ULL);
  std::vector<int64_t> order(static_cast<size_t>(train_set.size()));
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int64_t>(i);

  for (int64_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const double lr =
        epoch < config.lr_decay_epoch ? config.base_lr : config.decayed_lr;
    const auto t0 = std::chrono::steady_clock::now();

    // seeded Fisher-Yates shuffle
    for (int64_t i = train_set.size() - 1; i > 0; --i) {
      const int64_t j = static_cast<int64_t>(shuffle_rng.below(i + 1));
      std::swap(order[i], order[j]);
    }

    double loss_sum = 0.0;
    int64_t correct = 0;
    int64_t seen = 0;
    for (int64_t start = 0; start < train_set.size(); start += config.batch_size) {
      const int64_t count = std::min(config.batch_size, train_set.size() - start);
      Tensor xb = gather_batch(train_set.images, order, start, count);
      std::vector<int32_t> yb(static_cast<size_t>(count));
      for (int64_t i = 0; i < count; ++i) {
        yb[static_cast<size_t>(i)] = train_set.labels[order[start + i]];
      }
      try {
        Tape t;
        Value logits = net.forward(t, t.leaf(std::move(xb)), /*training=*/true);
        Value loss = ops::softmax_cross_entropy(t, logits, yb);
        const double loss_val = t.val(loss)[0];
        loss_sum += loss_val * static_cast<double>(count);
        const Tensor& lv = t.val(logits);
        for (int64_t i = 0; i < count; ++i) {
          if (argmax_row(lv, i) == yb[static_cast<size_t>(i)]) ++correct;
        }
        t.backward(loss);
        sgd_step(params, lr, config.momentum);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(start / config.batch_size) + ": " +
                           e.what());
      }
      seen += count;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.train_loss = loss_sum / static_cast<double>(seen);
    rec.train_acc = static_cast<double>(correct) / static_cast<double>(seen);
    rec.test_acc = test_set.size() > 0 ? evaluate(net, test_set) : 0.0;
    const auto t1 = std::chrono::steady_clock::now();
    rec.wall_time_s =
        config.deterministic
            ? 0.0
            : std::chrono::duration<double>(t1 - t0).count();
    log.records.push_back(rec);

    if (epoch % config.snapshot_every_epochs == 0 || epoch == config.epochs) {
      log.snapshots.push_back(take_snapshot(net, epoch));
    }
  }
  return log;
}

double evaluate(Network& net, const MnistDataset& data) {
  if (data.size() == 0) {
    throw ContractError("evaluate: empty dataset, accuracy undefined");
  }
  tune_allocator();
  constexpr int64_t kBatch = 256;
  std::vector<int64_t> order(static_cast<size_t>(data.size()));
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int64_t>(i);
  int64_t correct = 0;
  for (int64_t start = 0; start < data.size(); start += kBatch) {
    const int64_t count = std::min(kBatch, data.size() - start);
    Tensor xb = gather_batch(data.images, order, start, count);
    Tape t(/*recording=*/false);
    Value logits = net.forward(t, t.leaf(std::move(xb)), /*training=*/false);
    const Tensor& lv = t.val(logits);
    for (int64_t i = 0; i < count; ++i) {
      if (argmax_row(lv, i) == data.labels[static_cast<size_t>(start + i)]) {
        ++correct;
      }
    }
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

void write_metrics_csv(const std::string& path, const TrainLog& log) {
  CsvTable table;
  table.header = {"epoch", "train_loss", "train_acc", "test_acc", "wall_time_s"};
  for (const auto& r : log.records) {
    table.rows.push_back({std::to_string(r.epoch), fmt_double(r.train_loss),
                          fmt_double(r.train_acc), fmt_double(r.test_acc),
                          fmt_double(r.wall_time_s)});
  }
  write_csv(path, table);
}

TrainLog read_metrics_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  const std::vector<std::string> expected = {"epoch", "train_loss", "train_acc",
                                             "test_acc", "wall_time_s"};
  if (table.header != expected) {
    throw FormatError(path + ": unexpected metrics CSV header");
  }
  TrainLog log;
  for (const auto& row : table.rows) {
    EpochRecord r;
    r.epoch = parse_int(row[0]);
    r.train_loss = parse_double(row[1]);
    r.train_acc = parse_double(row[2]);
    r.test_acc = parse_double(row[3]);
    r.wall_time_s = parse_double(row[4]);
    log.records.push_back(r);
  }
  return log;
}

}  // namespace ulo
