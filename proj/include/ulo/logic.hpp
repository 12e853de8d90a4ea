#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ulo/error.hpp"

namespace ulo {

// The learnable part of U(x, y) = alpha*x*y + beta*y + gamma*x + b.
// b is not stored here: it folds into the layer bias and is passed
// separately where a full evaluation is wanted.
struct OpParams {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;

  friend bool operator==(const OpParams&, const OpParams&) = default;
};

enum class OpKind { And, Or, Xor, Mp };

enum class Polarity { Positive, Negated };

// A prescribed operator together with its sign class. The negated form is
// the antipodal parameter vector; an op and its negation are one symmetric
// class on the unit sphere.
struct PrescribedOp {
  OpKind kind = OpKind::And;
  Polarity polarity = Polarity::Positive;

  friend bool operator==(const PrescribedOp&, const PrescribedOp&) = default;
};

// Coefficients over the linearly independent AND / MP / OR basis.
struct Decomposition {
  double a_and = 0.0;
  double c_mp = 0.0;
  double c_or = 0.0;
};

struct NearestOp {
  std::optional<PrescribedOp> op;  // empty when no operator is within tolerance
  double angle_rad = 0.0;          // angular distance to the nearest candidate
};

struct TruthTableEntry {
  double x = 0.0;
  double y = 0.0;
  double value = 0.0;
};

// U(x, y) = alpha*x*y + beta*y + gamma*x + b, evaluated exactly as written.
double ulo_eval(const OpParams& p, double b, double x, double y);

// Parameter vector and bias of a prescribed operator. Negated polarity
// returns -(alpha, beta, gamma) and b' = 1 - b, so U_neg = 1 - U_pos.
std::pair<OpParams, double> prescribed_params(PrescribedOp op);

// (alpha, beta, gamma) / ||.||_2. Throws DegenerateError on the zero vector.
std::array<double, 3> normalize(const OpParams& p);

// Unique coefficients over the AND/MP/OR basis (closed form).
Decomposition decompose(const OpParams& p);

// Recompose a decomposition back into parameter space.
OpParams recompose(const Decomposition& d);

// Length-normalizes p and finds the prescribed operator (either polarity)
// with the smallest angular distance. Returns that operator when the
// distance is within tolerance, otherwise an empty op with the smallest
// distance found. Ties resolve in enumeration order AND < OR < XOR < MP,
// positive before negated.
NearestOp classify_nearest(const OpParams& p, double tolerance_rad);

// The four Boolean corners (0,0), (0,1), (1,0), (1,1) of an operator.
std::vector<TruthTableEntry> truth_table(PrescribedOp op);

// "and", "or", "xor", "mp" and negated forms "nand", "nor", "xnor", "nmp".
std::string op_name(PrescribedOp op);
std::string kind_name(OpKind kind);
std::optional<OpKind> kind_from_name(const std::string& name);

inline constexpr std::array<OpKind, 4> kAllKinds = {OpKind::And, OpKind::Or,
                                                    OpKind::Xor, OpKind::Mp};

}  // namespace ulo
