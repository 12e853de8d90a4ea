#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ulo/layers.hpp"

namespace ulo {

// The 7-layer convolutional classifier used for the digit experiments:
// six 3x3 ULO convolutions (32,32,64,64,128,128 channels, stride 2 at
// layers 3 and 5), each followed by batch norm and ReLU, then one ULO
// dense layer to 10 logits. Softmax/cross-entropy normalization happens
// at the output only.
class Network {
 public:
  Network(const LogicMode& mode, uint64_t seed);

  // x: [N,1,28,28] -> logits [N,10]
  Value forward(Tape& t, Value x, bool training);

  // Trainable parameters, fixed order.
  std::vector<Parameter*> parameters();
  // The logical parameter tensors (empty in fixed mode).
  std::vector<Parameter*> logic_parameters();
  // Every ULO layer's (name, kernels, logic tensor), both modes.
  std::vector<std::pair<std::string, const Tensor*>> logic_tensors() const;
  // All persistent state for checkpoints: parameters + BN running stats.
  std::vector<std::pair<std::string, Tensor*>> state_tensors();

  const LogicMode& mode() const { return mode_; }
  int64_t num_classes() const { return 10; }

  std::vector<UloConv2d>& convs() { return convs_; }
  std::vector<BatchNorm>& bns() { return bns_; }
  UloDense& fc() { return fc_holder_.front(); }

 private:
  LogicMode mode_;
  std::vector<UloConv2d> convs_;
  std::vector<BatchNorm> bns_;
  std::vector<UloDense> fc_holder_;  // single element; delayed construction
};

Network build_mnist_net(const LogicMode& mode, uint64_t seed);

}  // namespace ulo
