#pragma once

#include <cstring>
#include <optional>

#include "cosdf/co/discipline.hpp"
#include "cosdf/core/rng.hpp"
#include "cosdf/nlp/multistart.hpp"
#include "cosdf/sdf/sample.hpp"

namespace cosdf::co {

struct SubspaceOptions {
  int restarts = 3;
  /// j_star at or below this labels the target as feasible.
  double feasibility_threshold = 1e-6;
  std::uint64_t seed = 0;
  nlp::NlpOptions solver = tight_solver();

  static nlp::NlpOptions tight_solver() {
    nlp::NlpOptions o;
    o.feasibility_tol = 1e-9;
    o.optimality_tol = 1e-9;
    return o;
  }
};

struct SubspaceResult {
  DesignPoint z;
  double j_star = 0.0;
  DesignPoint z_proj;
  Vec local;
  std::optional<Vec> grad_sqrt_j;
  bool feasible = true;
  /// Constraint-set evaluations spent on this projection.
  long evaluations = 0;
  nlp::NlpStatus status = nlp::NlpStatus::Converged;
  double max_violation = 0.0;

  sdf::LabeledSample to_sample() const {
    sdf::LabeledSample s;
    s.z = z;
    s.j_star = j_star;
    s.feasible = feasible;
    if (!feasible) {
      s.z_proj = z_proj;
      s.grad_sqrt_j = grad_sqrt_j;
    }
    return s;
  }
};

namespace detail {
/// FNV-1a over the name and the bit patterns of z.
inline std::uint64_t hash_point(const std::string& name, const Vec& z) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const unsigned char* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  mix(reinterpret_cast<const unsigned char*>(name.data()), name.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    unsigned char buf[sizeof(double)];
    const double v = z[i];
    std::memcpy(buf, &v, sizeof v);
    mix(buf, sizeof buf);
  }
  return h;
}
}  // namespace detail

/// Projection of the target z onto the discipline's feasible set:
/// min |z_copy - z|^2 over (z_copy, local) subject to the discipline's
/// constraints, with z_copy kept in the shared box.
inline SubspaceResult evaluate_subspace(const Discipline& d, const Vec& shared_lower, const Vec& shared_upper,
                                        const DesignPoint& z, const SubspaceOptions& opts = {}) {
  const int ds = d.shared_dim(), dl = d.local_dim();
  if (z.size() != ds || shared_lower.size() != ds || shared_upper.size() != ds)
    throw InvalidInput("subspace " + d.name() + ": target has wrong dimension");
  if (!z.allFinite()) throw InvalidInput("subspace " + d.name() + ": non-finite target");

  nlp::NlpProblem p;
  p.dim = ds + dl;
  p.lower.resize(p.dim);
  p.upper.resize(p.dim);
  p.lower << shared_lower, d.local_lower();
  p.upper << shared_upper, d.local_upper();
  p.n_ineq = d.n_ineq();
  p.n_eq = d.n_eq();
  p.objective = [&z, ds](const Vec& y, Vec& g) {
    g.setZero(y.size());
    const Vec diff = y.head(ds) - z;
    g.head(ds) = 2.0 * diff;
    return diff.squaredNorm();
  };
  ConstraintValues cv;
  p.constraints = [&](const Vec& y, Vec& gi, Mat& ji, Vec& e, Mat& je) {
    d.evaluate(y.head(ds), y.tail(dl), cv);
    gi = cv.ineq;
    ji = cv.ineq_jac;
    e = cv.eq;
    je = cv.eq_jac;
  };

  Vec first(p.dim);
  first << z.cwiseMax(shared_lower).cwiseMin(shared_upper), 0.5 * (d.local_lower() + d.local_upper());
  const std::uint64_t seed = derive_seed(opts.seed, detail::hash_point(d.name(), z));
  const nlp::NlpSolution sol = nlp::multistart_solve(p, opts.restarts, seed, opts.solver, first);
  if (sol.status == nlp::NlpStatus::NumericError)
    throw NumericError("discipline " + d.name() + ": subspace solve failed: " + sol.message);

  SubspaceResult r;
  r.z = z;
  r.z_proj = sol.x.head(ds);
  r.local = sol.x.tail(dl);
  r.evaluations = sol.constraint_evaluations;
  r.status = sol.status;
  r.max_violation = sol.max_violation;
  const Vec diff = z - r.z_proj;
  const double dist = diff.norm();
  r.j_star = dist * dist;
  r.feasible = r.j_star <= opts.feasibility_threshold || dist == 0.0;
  if (!r.feasible) r.grad_sqrt_j = diff / dist;
  return r;
}

inline SubspaceResult evaluate_subspace(const CoProblem& problem, std::size_t discipline, const DesignPoint& z,
                                        const SubspaceOptions& opts = {}) {
  return evaluate_subspace(*problem.disciplines.at(discipline), problem.lower, problem.upper, z, opts);
}

}  // namespace cosdf::co
