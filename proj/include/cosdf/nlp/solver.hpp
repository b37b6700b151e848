#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "cosdf/nlp/problem.hpp"

namespace cosdf::nlp {

namespace detail {

/// Problem callbacks in box-scaled coordinates u, with x = offset + width * u.
class ScaledProblem {
 public:
  struct Point {
    Vec u;
    double f = 0.0;
    Vec grad;
    Vec ineq, eq;
    Mat ineq_jac, eq_jac;
  };

  ScaledProblem(const NlpProblem& p, bool scale) : p_(p) {
    offset_ = Vec::Zero(p.dim);
    width_ = Vec::Ones(p.dim);
    lower_ = p.lower;
    upper_ = p.upper;
    if (scale) {
      for (int i = 0; i < p.dim; ++i) {
        const double w = p.upper[i] - p.lower[i];
        if (std::isfinite(w) && w > 0.0) {
          offset_[i] = p.lower[i];
          width_[i] = w;
          lower_[i] = 0.0;
          upper_[i] = 1.0;
        }
      }
    }
  }

  Vec to_x(const Vec& u) const {
    Vec x = offset_ + width_.cwiseProduct(u);
    // Rounding in the affine map must never leave the original box.
    return x.cwiseMax(p_.lower).cwiseMin(p_.upper);
  }
  Vec to_u(const Vec& x) const { return (x - offset_).cwiseQuotient(width_); }
  Vec project(const Vec& u) const { return u.cwiseMax(lower_).cwiseMin(upper_); }
  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }

  /// Returns false when any callback output is non-finite.
  bool evaluate(const Vec& u, Point& pt) {
    pt.u = u;
    const Vec x = to_x(u);
    Vec gx(p_.dim);
    pt.f = p_.objective(x, gx);
    ++objective_evaluations;
    pt.grad = gx.cwiseProduct(width_);
    pt.ineq.resize(p_.n_ineq);
    pt.eq.resize(p_.n_eq);
    pt.ineq_jac.resize(p_.n_ineq, p_.dim);
    pt.eq_jac.resize(p_.n_eq, p_.dim);
    if (p_.n_ineq > 0 || p_.n_eq > 0) {
      p_.constraints(x, pt.ineq, pt.ineq_jac, pt.eq, pt.eq_jac);
      ++constraint_evaluations;
      if (pt.ineq.size() != p_.n_ineq || pt.eq.size() != p_.n_eq) throw InvalidInput("nlp: constraint size mismatch");
      pt.ineq_jac = pt.ineq_jac * width_.asDiagonal();
      pt.eq_jac = pt.eq_jac * width_.asDiagonal();
    }
    return std::isfinite(pt.f) && pt.grad.allFinite() && pt.ineq.allFinite() && pt.eq.allFinite() &&
           pt.ineq_jac.allFinite() && pt.eq_jac.allFinite();
  }

  long objective_evaluations = 0;
  long constraint_evaluations = 0;

 private:
  const NlpProblem& p_;
  Vec offset_, width_, lower_, upper_;
};

inline double max_violation(const ScaledProblem::Point& pt) {
  double v = 0.0;
  if (pt.ineq.size() > 0) v = std::max(v, pt.ineq.maxCoeff());
  if (pt.eq.size() > 0) v = std::max(v, pt.eq.cwiseAbs().maxCoeff());
  return v;
}

/// Projected-gradient residual |P(u - grad) - u|_inf.
inline double projected_gradient_norm(const ScaledProblem& sp, const Vec& u, const Vec& grad) {
  return (sp.project(u - grad) - u).cwiseAbs().maxCoeff();
}

struct Multipliers {
  Vec ineq;
  Vec eq;
  double penalty = 10.0;
};

/// Augmented Lagrangian value and gradient at an evaluated point.
inline double augmented_lagrangian(const ScaledProblem::Point& pt, const Multipliers& m, Vec& grad) {
  const double rho = m.penalty;
  double v = pt.f;
  grad = pt.grad;
  for (Eigen::Index k = 0; k < pt.eq.size(); ++k) {
    v += m.eq[k] * pt.eq[k] + 0.5 * rho * pt.eq[k] * pt.eq[k];
    grad += (m.eq[k] + rho * pt.eq[k]) * pt.eq_jac.row(k).transpose();
  }
  for (Eigen::Index j = 0; j < pt.ineq.size(); ++j) {
    const double shifted = std::max(0.0, m.ineq[j] + rho * pt.ineq[j]);
    v += (shifted * shifted - m.ineq[j] * m.ineq[j]) / (2.0 * rho);
    if (shifted > 0.0) grad += shifted * pt.ineq_jac.row(j).transpose();
  }
  return v;
}

/// Gradient of the ordinary Lagrangian f + eq^T e + ineq^T g.
inline Vec lagrangian_gradient(const ScaledProblem::Point& pt, const Multipliers& m) {
  Vec g = pt.grad;
  if (pt.eq.size() > 0) g += pt.eq_jac.transpose() * m.eq;
  if (pt.ineq.size() > 0) g += pt.ineq_jac.transpose() * m.ineq;
  return g;
}

inline double kkt_residual(const ScaledProblem& sp, const ScaledProblem::Point& pt, const Multipliers& m) {
  double r = projected_gradient_norm(sp, pt.u, lagrangian_gradient(pt, m));
  for (Eigen::Index j = 0; j < pt.ineq.size(); ++j) r = std::max(r, std::min(m.ineq[j], std::abs(pt.ineq[j])));
  return r;
}

class Tracer {
 public:
  explicit Tracer(const std::string& path) {
    if (!path.empty()) {
      out_.open(path, std::ios::app);
      if (out_.tellp() == 0) out_ << "outer,inner,merit,max_violation,x\n";
    }
  }
  void row(int outer, int inner, double merit, double viol, const Vec& x) {
    if (!out_.is_open()) return;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%d,%d,%.10g,%.10g,", outer, inner, merit, viol);
    out_ << buf;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%s%.10g", i ? " " : "", x[i]);
      out_ << buf;
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

enum class InnerExit { Converged, MaxIter, Stalled, NumericError };

/// Box-constrained quasi-Newton minimization of the augmented Lagrangian.
/// BFGS acts on the variables that are not held at a bound; the step is
/// projected onto the box and accepted by an Armijo backtracking search.
inline InnerExit minimize_box_bfgs(ScaledProblem& sp, ScaledProblem::Point& pt, const Multipliers& m, double tol,
                                   int max_iter, int& iterations, const NlpOptions& opts, Tracer& tracer,
                                   int outer) {
  const auto n = pt.u.size();
  Vec grad;
  double merit = augmented_lagrangian(pt, m, grad);
  Mat H = Mat::Identity(n, n);
  bool scaled_h = false;
  ScaledProblem::Point trial;
  Vec trial_grad;
  for (int it = 0; it < max_iter; ++it) {
    if (projected_gradient_norm(sp, pt.u, grad) <= tol) return InnerExit::Converged;

    // Variables pinned at a bound with the gradient pushing outward.
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool at_lo = pt.u[i] <= sp.lower()[i] && grad[i] > 0.0;
      const bool at_hi = pt.u[i] >= sp.upper()[i] && grad[i] < 0.0;
      if (!at_lo && !at_hi) free.push_back(i);
    }
    Vec dir = Vec::Zero(n);
    for (Eigen::Index a : free) {
      double s = 0.0;
      for (Eigen::Index b : free) s -= H(a, b) * grad[b];
      dir[a] = s;
    }
    double slope = grad.dot(dir);
    if (!(slope < 0.0)) {
      H.setIdentity();
      scaled_h = false;
      dir.setZero();
      for (Eigen::Index a : free) dir[a] = -grad[a];
      slope = grad.dot(dir);
      if (!(slope < 0.0)) return InnerExit::Converged;
    }
    if (!scaled_h) {
      // Unscaled first step: cap its length in the unit box.
      const double len = dir.cwiseAbs().maxCoeff();
      if (len > 0.1) dir *= 0.1 / len;
    }

    double alpha = 1.0;
    bool accepted = false;
    double trial_merit = merit;
    for (int ls = 0; ls < 50; ++ls) {
      const Vec u_new = sp.project(pt.u + alpha * dir);
      if ((u_new - pt.u).cwiseAbs().maxCoeff() == 0.0) break;
      if (sp.evaluate(u_new, trial)) {
        trial_merit = augmented_lagrangian(trial, m, trial_grad);
        const Vec step = u_new - pt.u;
        const double d0 = grad.dot(step);
        const bool armijo = trial_merit <= merit + 1e-4 * d0;
        // Once merit differences reach rounding level, fall back on the
        // approximate Wolfe test, which only needs directional derivatives.
        const double d1 = trial_grad.dot(step);
        const bool approx_wolfe = trial_merit <= merit + 1e-12 * std::abs(merit) && d1 >= 0.9 * d0 &&
                                  d1 <= -(1.0 - 2e-4) * d0;
        if (std::isfinite(trial_merit) && (armijo || approx_wolfe)) {
          accepted = true;
          break;
        }
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      if (scaled_h) {
        // Retry from a steepest-descent model before giving up.
        H.setIdentity();
        scaled_h = false;
        continue;
      }
      return InnerExit::Stalled;
    }

    const Vec s = trial.u - pt.u;
    const Vec y = trial_grad - grad;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled_h) {
        H *= sy / y.squaredNorm();
        scaled_h = true;
      }
      const double r = 1.0 / sy;
      const Vec Hy = H * y;
      H += (r * r * y.dot(Hy) + r) * (s * s.transpose()) - r * (Hy * s.transpose() + s * Hy.transpose());
    }
    pt = trial;
    grad = trial_grad;
    merit = trial_merit;
    ++iterations;
    const Vec x = sp.to_x(pt.u);
    tracer.row(outer, it, merit, max_violation(pt), x);
    if (opts.on_iterate) opts.on_iterate(x);
  }
  return InnerExit::MaxIter;
}

}  // namespace detail

/// Augmented-Lagrangian solve from x0 (clipped into the box).
inline NlpSolution solve(const NlpProblem& problem, const Vec& x0, const NlpOptions& opts = {}) {
  problem.validate();
  if (x0.size() != problem.dim) throw InvalidInput("nlp: x0 has wrong size");
  detail::ScaledProblem sp(problem, opts.scale_variables);
  detail::Tracer tracer(opts.trace_path);
  NlpSolution sol;

  Vec x_start = x0.cwiseMax(problem.lower).cwiseMin(problem.upper);
  detail::ScaledProblem::Point pt;
  auto finish = [&](NlpStatus status, const detail::Multipliers& m, std::string msg) {
    sol.x = sp.to_x(pt.u);
    sol.f = pt.f;
    sol.max_violation = detail::max_violation(pt);
    sol.status = status;
    sol.ineq_multipliers = m.ineq;
    sol.eq_multipliers = m.eq;
    sol.objective_evaluations = sp.objective_evaluations;
    sol.constraint_evaluations = sp.constraint_evaluations;
    sol.message = std::move(msg);
    return sol;
  };

  detail::Multipliers m;
  m.ineq = Vec::Zero(problem.n_ineq);
  m.eq = Vec::Zero(problem.n_eq);
  m.penalty = opts.initial_penalty;

  Vec u0 = sp.project(sp.to_u(x_start));
  if (!sp.evaluate(u0, pt)) {
    pt.u = u0;
    return finish(NlpStatus::NumericError, m, "non-finite callback value at the starting point");
  }

  double prev_violation = detail::max_violation(pt);
  for (int outer = 0; outer < opts.max_outer; ++outer) {
    sol.outer_iterations = outer + 1;
    const double inner_tol = std::max(0.1 * opts.optimality_tol, 1e-2 * std::pow(0.1, outer));
    detail::InnerExit exit;
    try {
      exit = detail::minimize_box_bfgs(sp, pt, m, inner_tol, opts.max_inner, sol.iterations, opts, tracer, outer);
    } catch (const NumericError& e) {
      return finish(NlpStatus::NumericError, m, e.what());
    }
    if (exit == detail::InnerExit::NumericError) return finish(NlpStatus::NumericError, m, "non-finite values");

    const double violation = detail::max_violation(pt);
    for (Eigen::Index k = 0; k < pt.eq.size(); ++k) m.eq[k] += m.penalty * pt.eq[k];
    for (Eigen::Index j = 0; j < pt.ineq.size(); ++j) m.ineq[j] = std::max(0.0, m.ineq[j] + m.penalty * pt.ineq[j]);
    sol.stationarity = detail::kkt_residual(sp, pt, m);
    if (!m.eq.allFinite() || !m.ineq.allFinite()) return finish(NlpStatus::NumericError, m, "multiplier overflow");

    if (violation <= opts.feasibility_tol && sol.stationarity <= opts.optimality_tol)
      return finish(NlpStatus::Converged, m, "");
    if (violation > opts.feasibility_tol && violation > 0.25 * prev_violation)
      m.penalty = std::min(m.penalty * 10.0, opts.max_penalty);
    prev_violation = violation;
  }
  const bool feasible = detail::max_violation(pt) <= opts.feasibility_tol;
  return finish(feasible ? NlpStatus::MaxIter : NlpStatus::Infeasible, m,
                "iteration limit reached");
}

}  // namespace cosdf::nlp
