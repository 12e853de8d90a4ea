#pragma once

#include <cstdint>
#include <vector>

#include "ulo/tape.hpp"

namespace ulo {

// Convolution lowering geometry. Patches are laid out [K, N*P] with
// K = C*kh*kw rows and one column per (image, output position).
struct ConvGeom {
  int64_t n = 0, c = 0, h = 0, w = 0;
  int64_t kh = 0, kw = 0;
  int64_t stride = 1, pad = 0;

  int64_t out_h() const { return (h + 2 * pad - kh) / stride + 1; }
  int64_t out_w() const { return (w + 2 * pad - kw) / stride + 1; }
  int64_t patch_len() const { return c * kh * kw; }       // K
  int64_t positions() const { return out_h() * out_w(); }  // P
};

// Per-channel batch normalization state. scale/shift are learned; the
// running statistics feed eval-mode forward passes.
struct BatchNorm {
  Parameter scale;
  Parameter shift;
  Tensor running_mean;
  Tensor running_var;
  double eps = 1e-5;
  double momentum = 0.1;

  BatchNorm() = default;
  BatchNorm(const std::string& name, int64_t channels)
      : scale(name + ".scale", Tensor::full({channels}, 1.0)),
        shift(name + ".shift", Tensor::zeros({channels})),
        running_mean(Tensor::zeros({channels})),
        running_var(Tensor::full({channels}, 1.0)) {}

  int64_t channels() const { return scale.value.numel(); }
};

namespace ops {

Value add(Tape& t, Value a, Value b);    // same shape
Value mul(Tape& t, Value a, Value b);    // elementwise
Value scale(Tape& t, Value a, double c);
Value matmul(Tape& t, Value a, Value b);  // [M,K] x [K,N]
Value relu(Tape& t, Value a);
Value logistic(Tape& t, Value a);
Value reshape(Tape& t, Value a, Shape shape);

// Mean over the given axes (dropped from the output shape).
Value mean(Tape& t, Value a, std::vector<int> axes);

// x: [N,C,H,W]. Training mode normalizes with batch statistics and updates
// bn's running stats; eval mode uses the running stats.
Value batchnorm(Tape& t, Value x, BatchNorm& bn, bool training);

// logits: [N,C]; labels in [0,C). Returns the scalar mean cross-entropy.
Value softmax_cross_entropy(Tape& t, Value logits,
                            const std::vector<int32_t>& labels);

// x: [N,C,H,W] -> patches [K, N*P]. Zero padding.
Value im2col(Tape& t, Value x, const ConvGeom& g);

}  // namespace ops
}  // namespace ulo
