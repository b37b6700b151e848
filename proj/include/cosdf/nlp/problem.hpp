#pragma once

#include <functional>
#include <limits>
#include <string>

#include "cosdf/core/types.hpp"

namespace cosdf::nlp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// min f(x) s.t. g(x) <= 0, e(x) = 0, lower <= x <= upper.
struct NlpProblem {
  int dim = 0;
  Vec lower;
  Vec upper;
  int n_ineq = 0;
  int n_eq = 0;
  /// Returns f(x) and writes its gradient.
  std::function<double(const Vec& x, Vec& grad)> objective;
  /// Writes g(x), dg/dx (n_ineq x dim), e(x), de/dx (n_eq x dim). May be
  /// empty when there are no general constraints.
  std::function<void(const Vec& x, Vec& ineq, Mat& ineq_jac, Vec& eq, Mat& eq_jac)> constraints;

  void validate() const {
    if (dim <= 0) throw InvalidConfig("nlp: dimension must be positive");
    if (lower.size() != dim || upper.size() != dim) throw InvalidConfig("nlp: bounds have wrong size");
    if ((lower.array() > upper.array()).any()) throw InvalidConfig("nlp: lower bound above upper bound");
    if (!objective) throw InvalidConfig("nlp: missing objective");
    if ((n_ineq > 0 || n_eq > 0) && !constraints) throw InvalidConfig("nlp: missing constraint callback");
  }

  static NlpProblem unbounded(int dim) {
    NlpProblem p;
    p.dim = dim;
    p.lower = Vec::Constant(dim, -kInf);
    p.upper = Vec::Constant(dim, kInf);
    return p;
  }
};

enum class NlpStatus { Converged, MaxIter, Infeasible, NumericError };

inline std::string to_string(NlpStatus s) {
  switch (s) {
    case NlpStatus::Converged: return "Converged";
    case NlpStatus::MaxIter: return "MaxIter";
    case NlpStatus::Infeasible: return "Infeasible";
    case NlpStatus::NumericError: return "NumericError";
  }
  return "?";
}

struct NlpOptions {
  double feasibility_tol = 1e-6;
  double optimality_tol = 1e-6;
  int max_outer = 50;
  int max_inner = 200;
  double initial_penalty = 10.0;
  double max_penalty = 1e10;
  /// Work in coordinates scaled to the unit box where bounds are finite.
  bool scale_variables = true;
  /// Called with every accepted inner iterate (in original coordinates).
  std::function<void(const Vec& x)> on_iterate;
  /// When non-empty, one CSV row per accepted iterate is appended here.
  std::string trace_path;
};

struct NlpSolution {
  Vec x;
  double f = std::numeric_limits<double>::quiet_NaN();
  double max_violation = kInf;
  /// KKT residual: projected Lagrangian gradient in scaled coordinates plus
  /// complementarity.
  double stationarity = kInf;
  NlpStatus status = NlpStatus::NumericError;
  int iterations = 0;
  int outer_iterations = 0;
  long objective_evaluations = 0;
  long constraint_evaluations = 0;
  Vec ineq_multipliers;
  Vec eq_multipliers;
  std::string message;

  bool feasible(double tol) const { return status != NlpStatus::NumericError && max_violation <= tol; }
};

}  // namespace cosdf::nlp
