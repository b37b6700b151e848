#pragma once

#include <vector>

#include "cosdf/core/types.hpp"
#include "cosdf/nn/network.hpp"

namespace cosdf::nn {

/// Gradient with respect to every weight and bias, shaped like the network.
struct ParamGrad {
  std::vector<Mat> weights;
  std::vector<Vec> biases;

  static ParamGrad zeros_like(const Network& net) {
    ParamGrad g;
    for (const auto& L : net.layers()) {
      g.weights.push_back(Mat::Zero(L.out(), L.in()));
      g.biases.push_back(Vec::Zero(L.out()));
    }
    return g;
  }

  void set_zero() {
    for (auto& w : weights) w.setZero();
    for (auto& b : biases) b.setZero();
  }

  ParamGrad& operator+=(const ParamGrad& o) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
      weights[l] += o.weights[l];
      biases[l] += o.biases[l];
    }
    return *this;
  }

  ParamGrad& operator*=(double s) {
    for (auto& w : weights) w *= s;
    for (auto& b : biases) b *= s;
    return *this;
  }

  bool all_finite() const {
    for (std::size_t l = 0; l < weights.size(); ++l)
      if (!weights[l].allFinite() || !biases[l].allFinite()) return false;
    return true;
  }
};

/// Records one evaluation of a scalar-output network together with its input
/// gradient, and back-propagates adjoints of both through the parameters.
///
/// The input gradient is carried forward as the tangent matrix
/// T_l = d a_l / d z, so that losses depending on grad_z h(z) are ordinary
/// functions of the recorded quantities and reverse mode over this extended
/// pass yields exact mixed second derivatives. The adjoint returned by
/// backward() is d loss / d z, which lets callers chain through inputs that
/// themselves depend on the parameters.
class InputGradientTape {
 public:
  void forward(const Network& net, const Vec& z, bool with_gradient = true) {
    if (net.output_dim() != 1) throw InvalidConfig("tape requires a scalar-output network");
    if (z.size() != net.input_dim()) throw InvalidInput("tape: input dimension mismatch");
    net_ = &net;
    with_gradient_ = with_gradient;
    const auto& layers = net.layers();
    const std::size_t L = layers.size();
    const auto d = z.size();
    a_.resize(L);
    pre_.resize(L);
    T_.resize(L);
    U_.resize(L);
    perm_.resize(L);
    a_[0] = z;
    if (with_gradient) T_[0] = Mat::Identity(d, d);
    const bool tanh = net.config().activation == Activation::Tanh;
    for (std::size_t l = 0; l + 1 < L; ++l) {
      const auto& W = layers[l].weights;
      pre_[l].noalias() = W * a_[l];
      pre_[l] += layers[l].biases;
      if (with_gradient) U_[l].noalias() = W.lazyProduct(T_[l]);
      if (tanh) {
        a_[l + 1].noalias() = pre_[l].array().tanh().matrix();
        if (with_gradient) {
          T_[l + 1].noalias() = (1.0 - a_[l + 1].array().square()).matrix().asDiagonal() * U_[l];
        }
      } else {
        group_sort_into(pre_[l], net.config().group_count, a_[l + 1], perm_[l]);
        if (with_gradient) {
          T_[l + 1].resize(U_[l].rows(), U_[l].cols());
          for (Eigen::Index i = 0; i < U_[l].rows(); ++i) T_[l + 1].row(i) = U_[l].row(perm_[l][i]);
        }
      }
    }
    const auto& out = layers[L - 1];
    h_ = out.weights.row(0).dot(a_[L - 1]) + out.biases[0];
    if (with_gradient) g_.noalias() = T_[L - 1].transpose() * out.weights.row(0).transpose();
    else g_.resize(0);
  }

  double value() const { return h_; }
  const Vec& input_gradient() const { return g_; }

  /// Accumulates d loss / d params into acc given d loss / d h (h_bar) and
  /// d loss / d grad_z h (g_bar; may be empty). Returns d loss / d z, which
  /// stays valid until the next call.
  const Vec& backward(double h_bar, const Vec& g_bar, ParamGrad& acc) const {
    const auto& layers = net_->layers();
    const std::size_t L = layers.size();
    const bool use_g = g_bar.size() > 0;
    if (use_g && !with_gradient_) throw InvalidInput("tape: gradient adjoint without recorded tangents");
    const bool tanh = net_->config().activation == Activation::Tanh;

    const auto& out = layers[L - 1];
    a_bar_.noalias() = out.weights.row(0).transpose() * h_bar;
    acc.weights[L - 1].row(0) += h_bar * a_[L - 1].transpose();
    acc.biases[L - 1][0] += h_bar;
    if (use_g) {
      acc.weights[L - 1].row(0).noalias() += (T_[L - 1] * g_bar).transpose();
      T_bar_.noalias() = out.weights.row(0).transpose() * g_bar.transpose();
    }

    for (std::size_t l = L - 1; l-- > 0;) {
      const auto& W = layers[l].weights;
      const auto n = pre_[l].size();
      if (tanh) {
        const Vec& a = a_[l + 1];
        s_.noalias() = (1.0 - a.array().square()).matrix();
        pre_bar_.noalias() = a_bar_.cwiseProduct(s_);
        if (use_g) {
          U_bar_.noalias() = s_.asDiagonal() * T_bar_;
          pre_bar_.array() +=
              T_bar_.cwiseProduct(U_[l]).rowwise().sum().array() * (-2.0 * a.array() * s_.array());
        }
      } else {
        pre_bar_.setZero(n);
        for (Eigen::Index i = 0; i < n; ++i) pre_bar_[perm_[l][i]] += a_bar_[i];
        if (use_g) {
          U_bar_.resize(T_bar_.rows(), T_bar_.cols());
          for (Eigen::Index i = 0; i < n; ++i) U_bar_.row(perm_[l][i]) = T_bar_.row(i);
        }
      }
      acc.weights[l].noalias() += pre_bar_ * a_[l].transpose();
      acc.biases[l] += pre_bar_;
      a_bar_.noalias() = W.transpose() * pre_bar_;
      if (use_g) {
        acc.weights[l].noalias() += U_bar_.lazyProduct(T_[l].transpose());
        T_bar_.noalias() = W.transpose().lazyProduct(U_bar_);
      }
    }
    return a_bar_;
  }

 private:
  const Network* net_ = nullptr;
  bool with_gradient_ = true;
  std::vector<Vec> a_;
  std::vector<Vec> pre_;
  std::vector<Mat> T_;
  std::vector<Mat> U_;
  std::vector<std::vector<int>> perm_;
  double h_ = 0.0;
  Vec g_;
  // Backward scratch.
  mutable Vec a_bar_, pre_bar_, s_;
  mutable Mat T_bar_, U_bar_;
};

/// h(z) and grad_z h(z) without recording.
inline std::pair<double, Vec> value_and_input_gradient(const Network& net, const Vec& z) {
  InputGradientTape tape;
  tape.forward(net, z, true);
  return {tape.value(), tape.input_gradient()};
}

}  // namespace cosdf::nn
