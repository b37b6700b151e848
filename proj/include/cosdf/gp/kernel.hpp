#pragma once

#include <vector>

#include "cosdf/core/dual.hpp"
#include "cosdf/core/types.hpp"

namespace cosdf::gp {

/// Squared-exponential hyperparameters.
template <class T = double>
struct SeHyper {
  T signal_variance = T(1.0);
  std::vector<T> lengthscales;

  void validate(Eigen::Index dim) const {
    if (static_cast<Eigen::Index>(lengthscales.size()) != dim)
      throw InvalidConfig("se kernel: lengthscale count does not match dimension");
    if (!(value_of(signal_variance) > 0.0)) throw InvalidConfig("se kernel: signal variance must be positive");
    for (const T& l : lengthscales)
      if (!(value_of(l) > 0.0)) throw InvalidConfig("se kernel: lengthscales must be positive");
  }
};

/// Covariances between the value and gradient of f at x1 and at x2.
template <class T>
struct KernelBlocks {
  T value_value;                                  // cov(f(x1), f(x2))
  Eigen::Matrix<T, Eigen::Dynamic, 1> value_grad;  // cov(f(x1), grad f(x2))
  Eigen::Matrix<T, Eigen::Dynamic, 1> grad_value;  // cov(grad f(x1), f(x2))
  Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> grad_grad;  // cov(grad f(x1), grad f(x2))
};

template <class T>
KernelBlocks<T> se_kernel_blocks(const Vec& x1, const Vec& x2, const SeHyper<T>& hyper) {
  const Eigen::Index d = x1.size();
  if (x2.size() != d) throw InvalidInput("se kernel: dimension mismatch");
  hyper.validate(d);
  std::vector<T> scaled(static_cast<std::size_t>(d));  // (x1 - x2) / l^2
  T sq(0.0);
  for (Eigen::Index i = 0; i < d; ++i) {
    const T& l = hyper.lengthscales[static_cast<std::size_t>(i)];
    const double r = x1[i] - x2[i];
    scaled[static_cast<std::size_t>(i)] = r / (l * l);
    sq += r * scaled[static_cast<std::size_t>(i)];
  }
  using std::exp;
  KernelBlocks<T> b;
  b.value_value = hyper.signal_variance * exp(-0.5 * sq);
  const T& k = b.value_value;
  b.value_grad.resize(d);
  b.grad_value.resize(d);
  b.grad_grad.resize(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const T& si = scaled[static_cast<std::size_t>(i)];
    b.value_grad[i] = k * si;
    b.grad_value[i] = -(k * si);
    for (Eigen::Index j = 0; j < d; ++j) {
      const T& lj = hyper.lengthscales[static_cast<std::size_t>(j)];
      T v = -(k * si * scaled[static_cast<std::size_t>(j)]);
      if (i == j) v += k / (lj * lj);
      b.grad_grad(i, j) = v;
    }
  }
  return b;
}

}  // namespace cosdf::gp
