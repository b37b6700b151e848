#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "cosdf/core/types.hpp"
#include "cosdf/nn/network.hpp"
#include "cosdf/nn/tape.hpp"
#include "cosdf/sdf/sample.hpp"

namespace cosdf::sdf {

namespace detail {
inline double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

inline void require_projection(const LabeledSample& s) {
  if (!s.feasible && (!s.z_proj || !s.grad_sqrt_j))
    throw InvalidInput("infeasible sample is missing its projection or gradient");
}
}  // namespace detail

/// Asymmetric loss: regression on sqrt(J*) outside, non-positivity inside.
inline double hybrid_loss(double h, const LabeledSample& s) {
  return s.feasible ? std::max(h, 0.0) : std::abs(h - std::sqrt(s.j_star));
}

/// d hybrid_loss / d h.
inline double hybrid_loss_slope(double h, const LabeledSample& s) {
  return s.feasible ? (h > 0.0 ? 1.0 : 0.0) : detail::sign(h - std::sqrt(s.j_star));
}

/// Mean squared error on J*.
inline double jfit_loss(double h, const LabeledSample& s) { return (h - s.j_star) * (h - s.j_star); }
inline double jfit_loss_slope(double h, const LabeledSample& s) { return 2.0 * (h - s.j_star); }

/// Hinge loss with y = +1 for infeasible samples, -1 for feasible ones.
inline double hinge_loss(double h, const LabeledSample& s) {
  const double y = s.feasible ? -1.0 : 1.0;
  return std::max(0.0, 1.0 - y * h);
}
inline double hinge_loss_slope(double h, const LabeledSample& s) {
  const double y = s.feasible ? -1.0 : 1.0;
  return 1.0 - y * h > 0.0 ? -y : 0.0;
}

/// Evaluates the losses that involve the network's input gradient and
/// accumulates their parameter gradients. Holds its tapes so repeated calls
/// do not reallocate.
class SdfLossEvaluator {
 public:
  /// Value of the gradient-augmented loss; if grad is non-null, its
  /// parameter gradient times `scale` is added to *grad.
  double gradient_augmented(const nn::Network& net, const LabeledSample& s, nn::ParamGrad* grad,
                            double scale = 1.0) {
    detail::require_projection(s);
    if (s.feasible) {
      tape_a_.forward(net, s.z, false);
      const double h = tape_a_.value();
      if (grad && h > 0.0) tape_a_.backward(scale, empty_, *grad);
      return std::max(h, 0.0);
    }
    const Vec& target = *s.grad_sqrt_j;
    const double root = std::sqrt(s.j_star);

    tape_a_.forward(net, s.z, true);
    const double h = tape_a_.value();
    const Vec& g = tape_a_.input_gradient();
    tape_b_.forward(net, *s.z_proj, true);
    const double hp = tape_b_.value();
    const Vec& gp = tape_b_.input_gradient();

    const double loss = std::abs(h - root) + (g - target).lpNorm<1>() + std::abs(hp) +
                        (gp - target).lpNorm<1>();
    if (grad) {
      g_bar_ = (g - target).unaryExpr([&](double x) { return scale * detail::sign(x); });
      tape_a_.backward(scale * detail::sign(h - root), g_bar_, *grad);
      g_bar_ = (gp - target).unaryExpr([&](double x) { return scale * detail::sign(x); });
      tape_b_.backward(scale * detail::sign(hp), g_bar_, *grad);
    }
    return loss;
  }

  /// Per-point SDF residual (|grad h| - 1)^2 + h(z')^2 + |grad h(z') - grad h(z)|^2
  /// with z' = z - h(z) grad h(z).
  double sdf_residual(const nn::Network& net, const Vec& z, nn::ParamGrad* grad, double scale = 1.0) {
    tape_a_.forward(net, z, true);
    const double h = tape_a_.value();
    const Vec& g = tape_a_.input_gradient();
    const double gnorm = g.norm();
    z_foot_.noalias() = z - h * g;
    tape_b_.forward(net, z_foot_, true);
    const double hf = tape_b_.value();
    diff_.noalias() = tape_b_.input_gradient() - g;
    const Vec& diff = diff_;
    const double value = (gnorm - 1.0) * (gnorm - 1.0) + hf * hf + diff.squaredNorm();
    if (grad) {
      // Reverse through the foot-point evaluation first; its input adjoint
      // feeds back into h and grad h at z.
      g_bar_ = 2.0 * scale * diff;
      const Vec& zf_bar = tape_b_.backward(2.0 * scale * hf, g_bar_, *grad);
      g_bar2_.noalias() = -2.0 * scale * diff - h * zf_bar;
      if (gnorm > 0.0) g_bar2_ += 2.0 * scale * (gnorm - 1.0) / gnorm * g;
      const double h_bar = -g.dot(zf_bar);
      tape_a_.backward(h_bar, g_bar2_, *grad);
    }
    return value;
  }

  /// Loss of a plain output-only objective (hybrid, J fit, hinge).
  template <class Loss, class Slope>
  double output_loss(const nn::Network& net, const LabeledSample& s, Loss loss, Slope slope,
                     nn::ParamGrad* grad, double scale = 1.0) {
    tape_a_.forward(net, s.z, false);
    const double h = tape_a_.value();
    if (grad) {
      const double dh = slope(h, s);
      if (dh != 0.0) tape_a_.backward(scale * dh, empty_, *grad);
    }
    return loss(h, s);
  }

 private:
  nn::InputGradientTape tape_a_;
  nn::InputGradientTape tape_b_;
  Vec g_bar_, g_bar2_, z_foot_, diff_;
  Vec empty_;
};

inline double gradient_augmented_loss(const nn::Network& net, const LabeledSample& s) {
  SdfLossEvaluator ev;
  return ev.gradient_augmented(net, s, nullptr);
}

/// Mean SDF residual over points; 0 for an empty list.
inline double sdf_regularizer(const nn::Network& net, const std::vector<Vec>& points) {
  if (points.empty()) return 0.0;
  SdfLossEvaluator ev;
  double total = 0.0;
  for (const auto& p : points) total += ev.sdf_residual(net, p, nullptr);
  return total / static_cast<double>(points.size());
}

}  // namespace cosdf::sdf
