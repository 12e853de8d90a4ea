#pragma once

#include <string>
#include <variant>

#include "ulo/logic.hpp"
#include "ulo/ops.hpp"
#include "ulo/rng.hpp"
#include "ulo/tape.hpp"

namespace ulo {

// How a layer's logical parameters are initialised in learnable mode.
struct LogicInit {
  enum class Kind { RandomGaussian, AsOperator };
  Kind kind = Kind::RandomGaussian;
  PrescribedOp op;  // used by AsOperator

  static LogicInit random() { return {Kind::RandomGaussian, {}}; }
  static LogicInit as_operator(PrescribedOp o) { return {Kind::AsOperator, o}; }
};

// Fixed mode freezes every kernel at a prescribed operator; learnable mode
// registers one (alpha, beta, gamma) triple per output kernel as a
// Parameter trained alongside the weights.
struct LogicMode {
  enum class Kind { Fixed, Learnable };
  Kind kind = Kind::Fixed;
  PrescribedOp fixed_op;  // Fixed
  LogicInit init;         // Learnable

  static LogicMode fixed(PrescribedOp op) { return {Kind::Fixed, op, {}}; }
  static LogicMode learnable(LogicInit init) {
    return {Kind::Learnable, {}, init};
  }
  bool is_learnable() const { return kind == Kind::Learnable; }
};

// Convolution whose multiply-accumulate is replaced by the averaged logic
// form  z_o = (a_o/K) x.w_o + b_o mean(w_o) + g_o mean(x_patch) + B_o,
// K = C_in*kh*kw. The logic tensor is [C_out, 3] in (alpha, beta, gamma)
// order for both modes; fixed mode just never registers it for training.
struct UloConv2d {
  std::string name;
  Parameter w;       // [C_out, C_in, kh, kw]
  Parameter bias;    // [C_out]
  Parameter logic;   // [C_out, 3]
  LogicMode mode;
  int64_t stride = 1;
  int64_t pad = 0;

  UloConv2d(std::string name, int64_t c_out, int64_t c_in, int64_t kh,
            int64_t kw, int64_t stride, int64_t pad, LogicMode mode, Rng& rng);

  int64_t c_out() const { return w.value.dim(0); }
  int64_t c_in() const { return w.value.dim(1); }
  int64_t kh() const { return w.value.dim(2); }
  int64_t kw() const { return w.value.dim(3); }
  int64_t fan_in() const { return c_in() * kh() * kw(); }  // K

  // x: [N, C_in, H, W] -> [N, C_out, H', W']
  Value forward(Tape& t, Value x);
};

// Fully connected form of the same computation, K = fan_in.
struct UloDense {
  std::string name;
  Parameter w;      // [units, fan_in]
  Parameter bias;   // [units]
  Parameter logic;  // [units, 3]
  LogicMode mode;

  UloDense(std::string name, int64_t units, int64_t fan_in, LogicMode mode,
           Rng& rng);

  int64_t units() const { return w.value.dim(0); }
  int64_t fan_in() const { return w.value.dim(1); }

  // x: [N, fan_in] -> [N, units]
  Value forward(Tape& t, Value x);
};

// Re-draws the logical parameters of a learnable layer. as_operator also
// folds the operator's b into the layer bias, once.
void init_logic(UloConv2d& layer, const LogicInit& init, Rng& rng);
void init_logic(UloDense& layer, const LogicInit& init, Rng& rng);

}  // namespace ulo
