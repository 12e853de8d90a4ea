#include "ulo/logic.hpp"

#include <cmath>

namespace ulo {

double ulo_eval(const OpParams& p, double b, double x, double y) {
  return p.alpha * x * y + p.beta * y + p.gamma * x + b;
}

std::pair<OpParams, double> prescribed_params(PrescribedOp op) {
  OpParams p;
  double b = 0.0;
  switch (op.kind) {
    case OpKind::And:
      p = {1.0, 0.0, 0.0};
      b = 0.0;
      break;
    case OpKind::Or:
      p = {-1.0, 1.0, 1.0};
      b = 0.0;
      break;
    case OpKind::Xor:
      p = {-2.0, 1.0, 1.0};
      b = 0.0;
      break;
    case OpKind::Mp:
      p = {1.0, 0.0, -0.5};
      b = 0.5;
      break;
  }
  if (op.polarity == Polarity::Negated) {
    p = {-p.alpha, -p.beta, -p.gamma};
    b = 1.0 - b;
  }
  return {p, b};
}

std::array<double, 3> normalize(const OpParams& p) {
  const double n = std::sqrt(p.alpha * p.alpha + p.beta * p.beta + p.gamma * p.gamma);
  if (n == 0.0 || !std::isfinite(n)) {
    throw DegenerateError("normalize: zero or non-finite parameter vector");
  }
  return {p.alpha / n, p.beta / n, p.gamma / n};
}

Decomposition decompose(const OpParams& p) {
  // The basis matrix [AND | MP | OR] has determinant 0.5; back-substitution
  // of the 3x3 system gives this closed form.
  Decomposition d;
  d.c_or = p.beta;
  d.c_mp = 2.0 * (p.beta - p.gamma);
  d.a_and = p.alpha - p.beta + 2.0 * p.gamma;
  return d;
}

OpParams recompose(const Decomposition& d) {
  // a*(1,0,0) + m*(1,0,-0.5) + o*(-1,1,1)
  return {d.a_and + d.c_mp - d.c_or, d.c_or, -0.5 * d.c_mp + d.c_or};
}

NearestOp classify_nearest(const OpParams& p, double tolerance_rad) {
  const auto v = normalize(p);  // throws on the zero vector
  NearestOp best;
  bool first = true;
  for (OpKind kind : kAllKinds) {
    for (Polarity pol : {Polarity::Positive, Polarity::Negated}) {
      const PrescribedOp cand{kind, pol};
      const auto u = normalize(prescribed_params(cand).first);
      double dot = v[0] * u[0] + v[1] * u[1] + v[2] * u[2];
      if (dot > 1.0) dot = 1.0;
      if (dot < -1.0) dot = -1.0;
      const double angle = std::acos(dot);
      if (first || angle < best.angle_rad) {
        best.op = cand;
        best.angle_rad = angle;
        first = false;
      }
    }
  }
  if (best.angle_rad > tolerance_rad) {
    best.op.reset();
  }
  return best;
}

std::vector<TruthTableEntry> truth_table(PrescribedOp op) {
  const auto [p, b] = prescribed_params(op);
  std::vector<TruthTableEntry> table;
  table.reserve(4);
  for (double x : {0.0, 1.0}) {
    for (double y : {0.0, 1.0}) {
      table.push_back({x, y, ulo_eval(p, b, x, y)});
    }
  }
  return table;
}

std::string kind_name(OpKind kind) {
  switch (kind) {
    case OpKind::And:
      return "and";
    case OpKind::Or:
      return "or";
    case OpKind::Xor:
      return "xor";
    case OpKind::Mp:
      return "mp";
  }
  return "?";
}

std::string op_name(PrescribedOp op) {
  const std::string base = kind_name(op.kind);
  if (op.polarity == Polarity::Positive) {
    return base;
  }
  return base == "xor" ? "xnor" : "n" + base;
}

std::optional<OpKind> kind_from_name(const std::string& name) {
  if (name == "and") return OpKind::And;
  if (name == "or") return OpKind::Or;
  if (name == "xor") return OpKind::Xor;
  if (name == "mp") return OpKind::Mp;
  return std::nullopt;
}

}  // namespace ulo
