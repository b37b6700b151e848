#pragma once

#include <cmath>
#include <numbers>
#include <optional>

#include "cosdf/gp/kernel.hpp"
#include "cosdf/nn/adam.hpp"

namespace cosdf::gp {

/// One observation: value and gradient of the modelled function at x.
struct Observation {
  Vec x;
  double value = 0.0;
  Vec gradient;
};

struct GpFitOptions {
  int steps = 200;
  double learning_rate = 1e-3;
};

/// Zero-mean GP over function values conditioned on values and gradients.
///
/// Targets are divided by a fixed positive scale before fitting so the
/// signal variance starts near the data magnitude; the prior mean stays zero.
class GpModel {
 public:
  GpModel() = default;

  /// Default hyperparameters for inputs in the box [lower, upper].
  static GpModel for_box(const Vec& lower, const Vec& upper) {
    if (lower.size() != upper.size() || lower.size() == 0) throw InvalidConfig("gp: bad domain box");
    GpModel m;
    m.hyper_.signal_variance = 1.0;
    for (Eigen::Index i = 0; i < lower.size(); ++i) {
      const double w = upper[i] - lower[i];
      if (!(w > 0.0)) throw InvalidConfig("gp: empty domain box");
      m.hyper_.lengthscales.push_back(0.5 * w);
    }
    return m;
  }

  const SeHyper<double>& hyper() const { return hyper_; }
  void set_hyper(SeHyper<double> h) {
    h.validate(static_cast<Eigen::Index>(h.lengthscales.size()));
    hyper_ = std::move(h);
  }
  double noise() const { return noise_; }
  void set_noise(double n) {
    if (!(n >= 0.0)) throw InvalidConfig("gp: noise must be non-negative");
    noise_ = n;
  }
  double jitter() const { return jitter_; }
  double target_scale() const { return scale_; }
  int dim() const { return static_cast<int>(hyper_.lengthscales.size()); }
  const std::vector<Observation>& data() const { return data_; }

  /// Stacked covariance of [f(x_1), grad f(x_1), f(x_2), ...] without noise.
  template <class T>
  static Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> covariance(const std::vector<Observation>& data,
                                                                     const SeHyper<T>& h) {
    const Eigen::Index d = static_cast<Eigen::Index>(h.lengthscales.size());
    const Eigen::Index block = d + 1;
    const Eigen::Index n = static_cast<Eigen::Index>(data.size()) * block;
    Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> k(n, n);
    for (std::size_t a = 0; a < data.size(); ++a) {
      for (std::size_t b = a; b < data.size(); ++b) {
        const KernelBlocks<T> kb = se_kernel_blocks(data[a].x, data[b].x, h);
        const Eigen::Index ia = static_cast<Eigen::Index>(a) * block;
        const Eigen::Index ib = static_cast<Eigen::Index>(b) * block;
        k(ia, ib) = kb.value_value;
        k.block(ia, ib + 1, 1, d) = kb.value_grad.transpose();
        k.block(ia + 1, ib, d, 1) = kb.grad_value;
        k.block(ia + 1, ib + 1, d, d) = kb.grad_grad;
        if (b != a) k.block(ib, ia, block, block) = k.block(ia, ib, block, block).transpose();
      }
    }
    return k;
  }

  /// Conditions on data with the current hyperparameters.
  void condition(std::vector<Observation> data) {
    if (data.empty()) throw InvalidInput("gp: no data");
    for (const Observation& o : data)
      if (o.x.size() != dim() || o.gradient.size() != dim() || !std::isfinite(o.value) || !o.x.allFinite() ||
          !o.gradient.allFinite())
        throw InvalidInput("gp: malformed observation");
    data_ = std::move(data);
    double sq = 0.0;
    for (const Observation& o : data_) sq += o.value * o.value;
    const double rms = std::sqrt(sq / static_cast<double>(data_.size()));
    scale_ = rms > 1e-12 ? rms : 1.0;
    targets_.resize(static_cast<Eigen::Index>(data_.size()) * (dim() + 1));
    for (std::size_t i = 0; i < data_.size(); ++i) {
      const Eigen::Index base = static_cast<Eigen::Index>(i) * (dim() + 1);
      targets_[base] = data_[i].value / scale_;
      targets_.segment(base + 1, dim()) = data_[i].gradient / scale_;
    }
    factorize();
  }

  /// Negative log marginal likelihood of the scaled targets.
  double nlml() const {
    require_fitted();
    const double logdet = 2.0 * chol_.matrixLLT().diagonal().array().log().sum();
    return 0.5 * targets_.dot(alpha_) + 0.5 * logdet +
           0.5 * static_cast<double>(targets_.size()) * std::log(2.0 * std::numbers::pi);
  }

  /// Gradient of nlml() with respect to (log signal variance, log lengthscales).
  Vec nlml_gradient() const {
    require_fitted();
    const Eigen::Index n = targets_.size();
    const Mat inv = chol_.solve(Mat::Identity(n, n));
    const Mat w = inv - alpha_ * alpha_.transpose();
    const int np = dim() + 1;
    Vec g(np);
    for (int p = 0; p < np; ++p) {
      SeHyper<Dual<1>> h;
      // Derivative with respect to the log parameter: seed d/dlog(q) = q.
      h.signal_variance = Dual<1>(hyper_.signal_variance);
      if (p == 0) h.signal_variance.d[0] = hyper_.signal_variance;
      for (int i = 0; i < dim(); ++i) {
        Dual<1> l(hyper_.lengthscales[static_cast<std::size_t>(i)]);
        if (p == i + 1) l.d[0] = l.v;
        h.lengthscales.push_back(l);
      }
      const auto k = covariance(data_, h);
      double tr = 0.0;
      for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c) tr += w(r, c) * k(r, c).d[0];
      g[p] = 0.5 * tr;
    }
    return g;
  }

  /// Type-II maximum likelihood with Adam in log-parameter space. Keeps the
  /// best hyperparameters seen, so the NLML never ends above its start.
  void fit_hyperparams(const GpFitOptions& opts = {}) {
    require_fitted();
    if (opts.steps < 0 || !(opts.learning_rate > 0.0)) throw InvalidConfig("gp: bad fit options");
    const int np = dim() + 1;
    Vec theta(np);
    theta[0] = std::log(hyper_.signal_variance);
    for (int i = 0; i < dim(); ++i) theta[i + 1] = std::log(hyper_.lengthscales[static_cast<std::size_t>(i)]);
    nn::AdamState adam;
    adam.learning_rate = opts.learning_rate;
    SeHyper<double> best = hyper_;
    double best_nlml = nlml();
    for (int step = 0; step < opts.steps; ++step) {
      const Vec g = nlml_gradient();
      if (!g.allFinite()) throw NumericError("gp: non-finite likelihood gradient", step);
      nn::adam_update(theta, g, adam);
      apply_theta(theta);
      try {
        factorize();
      } catch (const NumericError&) {
        set_hyper(best);
        factorize();
        throw NumericError("gp: covariance factorization failed during fit", step);
      }
      const double v = nlml();
      if (v < best_nlml) {
        best_nlml = v;
        best = hyper_;
      }
    }
    hyper_ = best;
    factorize();
  }

  /// Posterior mean and its gradient at x.
  double predict(const Vec& x, Vec* grad = nullptr) const {
    require_fitted();
    if (x.size() != dim()) throw InvalidInput("gp: query has wrong dimension");
    const Eigen::Index d = dim();
    double mean = 0.0;
    if (grad) grad->setZero(d);
    for (std::size_t i = 0; i < data_.size(); ++i) {
      const KernelBlocks<double> kb = se_kernel_blocks(x, data_[i].x, hyper_);
      const Eigen::Index base = static_cast<Eigen::Index>(i) * (d + 1);
      const double a = alpha_[base];
      const auto b = alpha_.segment(base + 1, d);
      mean += kb.value_value * a + kb.value_grad.dot(b);
      if (grad) *grad += kb.grad_value * a + kb.grad_grad * b;
    }
    if (grad) *grad *= scale_;
    return mean * scale_;
  }

 private:
  void require_fitted() const {
    if (data_.empty()) throw InvalidInput("gp: model has no data");
  }

  void apply_theta(const Vec& theta) {
    hyper_.signal_variance = std::exp(theta[0]);
    for (int i = 0; i < dim(); ++i) hyper_.lengthscales[static_cast<std::size_t>(i)] = std::exp(theta[i + 1]);
  }

  void factorize() {
    Mat k = covariance(data_, hyper_);
    const double asym = (k - k.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * std::max(1.0, hyper_.signal_variance)) throw NumericError("gp: covariance not symmetric");
    k.diagonal().array() += noise_;
    jitter_ = 1e-8 * hyper_.signal_variance;
    while (true) {
      Mat kj = k;
      kj.diagonal().array() += jitter_;
      chol_.compute(kj);
      if (chol_.info() == Eigen::Success && (chol_.matrixLLT().diagonal().array() > 0.0).all()) break;
      if (jitter_ >= 1e-3) throw NumericError("gp: covariance not positive definite at maximum jitter");
      jitter_ = std::min(jitter_ * 10.0, 1e-3);
    }
    alpha_ = chol_.solve(targets_);
    if (!alpha_.allFinite()) throw NumericError("gp: non-finite weights");
  }

  SeHyper<double> hyper_;
  double noise_ = 1e-6;
  double jitter_ = 0.0;
  double scale_ = 1.0;
  std::vector<Observation> data_;
  Vec targets_;
  Vec alpha_;
  Eigen::LLT<Mat> chol_;
};

/// Conditions a fresh or warm-started model on data and tunes it.
inline GpModel fit_gp(GpModel model, std::vector<Observation> data, const GpFitOptions& opts = {}) {
  model.condition(std::move(data));
  model.fit_hyperparams(opts);
  return model;
}

}  // namespace cosdf::gp
