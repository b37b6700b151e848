#pragma once

#include <optional>

#include "cosdf/core/rng.hpp"
#include "cosdf/nlp/solver.hpp"

namespace cosdf::nlp {

/// Ranks solutions: feasible before infeasible, then by f (feasible) or by
/// violation (infeasible). NumericError ranks last. Ties keep the earlier one.
inline bool better_solution(const NlpSolution& a, const NlpSolution& b, double feasibility_tol) {
  const bool a_ok = a.status != NlpStatus::NumericError;
  const bool b_ok = b.status != NlpStatus::NumericError;
  if (a_ok != b_ok) return a_ok;
  if (!a_ok) return false;
  const bool fa = a.feasible(feasibility_tol);
  const bool fb = b.feasible(feasibility_tol);
  if (fa != fb) return fa;
  if (fa) return a.f < b.f;
  return a.max_violation < b.max_violation;
}

/// Solves from n_restarts starting points drawn uniformly in the box. When
/// first_start is given it replaces the first random draw. Bounds must be
/// finite.
inline NlpSolution multistart_solve(const NlpProblem& problem, int n_restarts, std::uint64_t seed,
                                    const NlpOptions& opts = {}, const std::optional<Vec>& first_start = {}) {
  problem.validate();
  if (n_restarts < 1) throw InvalidConfig("multistart: n_restarts must be at least 1");
  if (!problem.lower.allFinite() || !problem.upper.allFinite())
    throw InvalidConfig("multistart: box bounds must be finite");
  Rng rng(seed);
  std::optional<NlpSolution> best;
  long objective_evals = 0, constraint_evals = 0;
  int iterations = 0;
  for (int r = 0; r < n_restarts; ++r) {
    Vec x0 = rng.uniform_in_box(problem.lower, problem.upper);
    if (r == 0 && first_start) x0 = *first_start;
    NlpSolution s = solve(problem, x0, opts);
    objective_evals += s.objective_evaluations;
    constraint_evals += s.constraint_evaluations;
    iterations += s.iterations;
    if (!best || better_solution(s, *best, opts.feasibility_tol)) best = std::move(s);
  }
  best->objective_evaluations = objective_evals;
  best->constraint_evaluations = constraint_evals;
  best->iterations = iterations;
  return *best;
}

}  // namespace cosdf::nlp
