#pragma once

#include <deque>
#include <functional>
#include <vector>

#include "ulo/tensor.hpp"

namespace ulo {

class Tape;

// Handle to a node on the tape.
struct Value {
  int32_t idx = -1;
  bool valid() const { return idx >= 0; }
};

// Record of executed ops, replayed in exact reverse order by backward().
// One tape serves one forward/backward pass; clear() between batches.
class Tape {
 public:
  // With recording off (inference), nodes keep values but no backward
  // closures, and backward() is unavailable.
  explicit Tape(bool recording = true) : recording_(recording) {}

  bool recording() const { return recording_; }

  // Constant input; set needs_grad to also collect a gradient for it
  // (used when a test wants d loss / d input).
  Value leaf(Tensor v, bool needs_grad = false);

  // Parameter leaf. After backward(), the parameter's grad accumulates
  // d loss / d value.
  Value param(Parameter& p);

  // Generic operation node. fn receives the tape and the node's own
  // handle; it reads grad(self) and accumulates into its inputs' buffers.
  using BackwardFn = std::function<void(Tape&, Value)>;
  Value push(Tensor out, std::vector<Value> inputs, const char* op,
             BackwardFn fn, bool check_finite = true);

  const Tensor& val(Value v) const { return nodes_[v.idx].value; }
  const char* op_name(Value v) const { return nodes_[v.idx].op; }
  bool needs_grad(Value v) const { return nodes_[v.idx].needs_grad; }
  const std::vector<Value>& inputs(Value v) const { return nodes_[v.idx].ins; }

  // Gradient buffer of a node, allocated (zeroed) on first use.
  Tensor& grad_buf(Value v);
  // Convenience: grad_buf(v) += g.
  void add_grad(Value v, const Tensor& g);
  bool grad_reached(Value v) const { return nodes_[v.idx].grad.numel() > 0; }

  // Reverse pass from a scalar loss. Populates Parameter::grad for every
  // parameter reachable from loss; unreached parameters keep their
  // (zero-initialised) gradients.
  void backward(Value loss);

  void clear();
  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;  // empty until reached in backward
    std::vector<Value> ins;
    BackwardFn fn;
    Parameter* param = nullptr;
    const char* op = "";
    bool needs_grad = false;
  };

  // deque: references returned by val()/grad_buf() stay valid across push
  std::deque<Node> nodes_;
  bool recording_ = true;
};

// buffer = momentum * buffer + grad; value -= lr * buffer; grad = 0.
void sgd_step(const std::vector<Parameter*>& params, double learning_rate,
              double momentum);

// Central-difference check of every coordinate of every given parameter.
struct GradCheckEntry {
  std::string param;
  int64_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
  bool ok = true;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> flagged;  // entries exceeding tolerance
  double max_rel_error = 0.0;
  int64_t checked = 0;
  bool all_ok = true;
};

// builder must deterministically construct a scalar loss from the current
// parameter values each time it is called.
GradCheckReport gradient_check(const std::function<Value(Tape&)>& builder,
                               const std::vector<Parameter*>& params,
                               double step, double tolerance);

}  // namespace ulo
