#pragma once

#include <cstdint>
#include <vector>

#include "cosdf/co/discipline.hpp"
#include "cosdf/nlp/multistart.hpp"

namespace cosdf::co {

struct AllAtOnceResult {
  DesignPoint z;
  std::vector<Vec> locals;
  double f = 0.0;
  nlp::NlpSolution solution;
};

/// Reference solve of the undecomposed problem: min f(z) over the shared and
/// every discipline's local variables, subject to all discipline constraints
/// at once. Used to establish the optimum the decomposed methods aim for.
inline AllAtOnceResult solve_all_at_once(const CoProblem& p, int restarts, std::uint64_t seed,
                                         const nlp::NlpOptions& opts = {}) {
  p.validate();
  const int nz = p.dim();
  std::vector<int> offset;
  int n = nz, n_ineq = 0, n_eq = 0;
  for (const auto& d : p.disciplines) {
    offset.push_back(n);
    n += d->local_dim();
    n_ineq += d->n_ineq();
    n_eq += d->n_eq();
  }
  nlp::NlpProblem prob;
  prob.dim = n;
  prob.lower.resize(n);
  prob.upper.resize(n);
  prob.lower.head(nz) = p.lower;
  prob.upper.head(nz) = p.upper;
  for (std::size_t i = 0; i < p.disciplines.size(); ++i) {
    const auto& d = *p.disciplines[i];
    prob.lower.segment(offset[i], d.local_dim()) = d.local_lower();
    prob.upper.segment(offset[i], d.local_dim()) = d.local_upper();
  }
  prob.n_ineq = n_ineq;
  prob.n_eq = n_eq;
  prob.objective = [&](const Vec& x, Vec& g) {
    Vec gz;
    const double f = p.objective(x.head(nz), gz);
    g.setZero(n);
    g.head(nz) = gz;
    return f;
  };
  prob.constraints = [&](const Vec& x, Vec& gi, Mat& ji, Vec& ge, Mat& je) {
    ConstraintValues cv;
    ji.setZero();
    je.setZero();
    int ri = 0, re = 0;
    for (std::size_t i = 0; i < p.disciplines.size(); ++i) {
      const auto& d = *p.disciplines[i];
      const int nl = d.local_dim();
      d.evaluate(x.head(nz), x.segment(offset[i], nl), cv);
      for (int k = 0; k < d.n_ineq(); ++k, ++ri) {
        gi[ri] = cv.ineq[k];
        ji.row(ri).head(nz) = cv.ineq_jac.row(k).head(nz);
        ji.row(ri).segment(offset[i], nl) = cv.ineq_jac.row(k).tail(nl);
      }
      for (int k = 0; k < d.n_eq(); ++k, ++re) {
        ge[re] = cv.eq[k];
        je.row(re).head(nz) = cv.eq_jac.row(k).head(nz);
        je.row(re).segment(offset[i], nl) = cv.eq_jac.row(k).tail(nl);
      }
    }
  };

  AllAtOnceResult r;
  r.solution = nlp::multistart_solve(prob, restarts, seed, opts);
  r.z = r.solution.x.head(nz);
  for (std::size_t i = 0; i < p.disciplines.size(); ++i)
    r.locals.push_back(r.solution.x.segment(offset[i], p.disciplines[i]->local_dim()));
  r.f = r.solution.f;
  return r;
}

}  // namespace cosdf::co
