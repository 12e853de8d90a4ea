#include "ulo/tape.hpp"

#include <cmath>
#include <string>

namespace ulo {

Value Tape::leaf(Tensor v, bool needs_grad) {
  Node n;
  n.value = std::move(v);
  n.op = "leaf";
  n.needs_grad = needs_grad && recording_;
  nodes_.push_back(std::move(n));
  return {static_cast<int32_t>(nodes_.size() - 1)};
}

Value Tape::param(Parameter& p) {
  Node n;
  n.value = p.value;
  n.op = "param";
  n.param = &p;
  n.needs_grad = recording_;
  nodes_.push_back(std::move(n));
  return {static_cast<int32_t>(nodes_.size() - 1)};
}

Value Tape::push(Tensor out, std::vector<Value> inputs, const char* op,
                 BackwardFn fn, bool check_finite) {
  if (check_finite && !out.all_finite()) {
    throw NumericError(std::string("non-finite output of op '") + op + "'");
  }
  Node n;
  n.value = std::move(out);
  n.op = op;
  if (recording_) {
    for (Value in : inputs) {
      if (nodes_[in.idx].needs_grad) {
        n.needs_grad = true;
        break;
      }
    }
    n.ins = std::move(inputs);
    if (n.needs_grad) n.fn = std::move(fn);
  }
  nodes_.push_back(std::move(n));
  return {static_cast<int32_t>(nodes_.size() - 1)};
}

Tensor& Tape::grad_buf(Value v) {
  Node& n = nodes_[v.idx];
  if (n.grad.numel() == 0 && n.value.numel() > 0) {
    n.grad = Tensor::zeros(n.value.shape());
  }
  return n.grad;
}

void Tape::add_grad(Value v, const Tensor& g) {
  Tensor& buf = grad_buf(v);
  if (!buf.same_shape(g)) {
    throw ShapeError("add_grad: gradient shape " + shape_str(g.shape()) +
                     " vs value shape " + shape_str(buf.shape()));
  }
  double* d = buf.data();
  const double* s = g.data();
  const int64_t n = g.numel();
  for (int64_t i = 0; i < n; ++i) d[i] += s[i];
}

void Tape::backward(Value loss) {
  if (!recording_) {
    throw ContractError("backward on a non-recording tape");
  }
  if (!loss.valid() || val(loss).numel() != 1) {
    throw ContractError("backward: loss must be a scalar");
  }
  grad_buf(loss).fill(1.0);
  for (int32_t i = loss.idx; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.needs_grad || n.grad.numel() == 0) continue;
    if (n.fn) n.fn(*this, Value{i});
    if (n.param != nullptr) {
      double* pg = n.param->grad.data();
      const double* g = n.grad.data();
      const int64_t m = n.grad.numel();
      for (int64_t j = 0; j < m; ++j) pg[j] += g[j];
    }
  }
}

void Tape::clear() { nodes_.clear(); }

void sgd_step(const std::vector<Parameter*>& params, double learning_rate,
              double momentum) {
  if (!(learning_rate > 0.0)) {
    throw ContractError("sgd_step: learning_rate must be positive");
  }
  if (momentum < 0.0 || momentum >= 1.0) {
    throw ContractError("sgd_step: momentum must be in [0, 1)");
  }
  for (Parameter* p : params) {
    double* v = p->value.data();
    double* g = p->grad.data();
    double* m = p->momentum.data();
    const int64_t n = p->value.numel();
    for (int64_t i = 0; i < n; ++i) {
      if (!std::isfinite(g[i])) {
        throw NumericError("sgd_step: non-finite gradient in parameter '" +
                           p->name + "'");
      }
      m[i] = momentum * m[i] + g[i];
      v[i] -= learning_rate * m[i];
      g[i] = 0.0;
    }
  }
}

GradCheckReport gradient_check(const std::function<Value(Tape&)>& builder,
                               const std::vector<Parameter*>& params,
                               double step, double tolerance) {
  if (!(step > 0.0)) {
    throw ContractError("gradient_check: step must be positive");
  }
  // analytic pass
  for (Parameter* p : params) p->grad.fill(0.0);
  std::vector<Tensor> analytic;
  {
    Tape t;
    Value loss = builder(t);
    t.backward(loss);
  }
  analytic.reserve(params.size());
  for (Parameter* p : params) analytic.push_back(p->grad.clone());

  auto eval_loss = [&]() {
    Tape t(false);
    Value loss = builder(t);
    return t.val(loss)[0];
  };

  GradCheckReport report;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Parameter& p = *params[pi];
    for (int64_t i = 0; i < p.value.numel(); ++i) {
      const double saved = p.value[i];
      p.value[i] = saved + step;
      const double up = eval_loss();
      p.value[i] = saved - step;
      const double down = eval_loss();
      p.value[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[pi][i];
      const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-6});
      const double rel = std::fabs(a - numeric) / denom;
      ++report.checked;
      report.max_rel_error = std::max(report.max_rel_error, rel);
      if (rel > tolerance) {
        report.all_ok = false;
        report.flagged.push_back({p.name, i, a, numeric, rel, false});
      }
    }
    p.grad.fill(0.0);
  }
  return report;
}

}  // namespace ulo
