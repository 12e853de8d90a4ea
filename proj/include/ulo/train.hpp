#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ulo/data.hpp"
#include "ulo/network.hpp"
#include "ulo/snapshot.hpp"

namespace ulo {

struct TrainConfig {
  int64_t epochs = 10;
  int64_t batch_size = 128;
  double base_lr = 0.05;
  int64_t lr_decay_epoch = 8;  // epochs >= this use decayed_lr (1-based)
  double decayed_lr = 0.005;
  double momentum = 0.9;
  uint64_t seed = 1;
  int64_t snapshot_every_epochs = 5;
  // Reproducible-output mode: wall-clock fields in emitted logs are zeroed
  // so identical runs produce identical bytes.
  bool deterministic = false;

  void validate() const;
};

struct EpochRecord {
  int64_t epoch = 0;  // 1-based
  double train_loss = 0;
  double train_acc = 0;
  double test_acc = 0;
  double wall_time_s = 0;
  double lr = 0;  // in-memory only, not part of metrics.csv
};

struct TrainLog {
  std::vector<EpochRecord> records;
  std::vector<LogicSnapshot> snapshots;
};

// Shuffled mini-batch SGD with momentum; snapshots at epoch 0, every
// snapshot_every_epochs, and the final epoch.
TrainLog train(Network& net, const MnistDataset& train_set,
               const MnistDataset& test_set, const TrainConfig& config);

// Argmax accuracy with batch norm in eval mode.
double evaluate(Network& net, const MnistDataset& data);

// metrics.csv: epoch,train_loss,train_acc,test_acc,wall_time_s
void write_metrics_csv(const std::string& path, const TrainLog& log);
TrainLog read_metrics_csv(const std::string& path);  // records only

}  // namespace ulo
