#pragma once

#include <cmath>

#include "cosdf/core/types.hpp"

namespace cosdf::nn {

/// Power-iteration estimate of the largest singular value. Starts from the
/// all-ones vector so the estimate is deterministic.
inline double spectral_norm_estimate(const Mat& w, int steps = 5) {
  Vec v = Vec::Ones(w.cols()).normalized();
  double sigma = w.norm();
  for (int k = 0; k < steps; ++k) {
    Vec u = w * v;
    const double un = u.norm();
    if (un == 0.0) return w.norm();
    Vec next = w.transpose() * (u / un);
    const double nn = next.norm();
    if (nn == 0.0) return un;
    sigma = nn;
    v = next / nn;
  }
  return sigma;
}

/// Max-abs deviation of the Gram matrix from identity: W^T W for tall or
/// square matrices, W W^T for wide ones.
inline double gram_deviation(const Mat& w) {
  const Mat gram = w.rows() >= w.cols() ? Mat(w.transpose() * w) : Mat(w * w.transpose());
  return (gram - Mat::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

/// Order-1 Bjorck iteration A <- (1 + beta) A - beta A A^T A, after dividing
/// by a spectral-norm estimate. The inner product is taken on the short side.
inline Mat bjorck_orthonormalize(const Mat& w, int iterations = 15, double beta = 0.5) {
  if (!w.allFinite()) throw NumericError("bjorck_orthonormalize: non-finite weights");
  if (iterations < 0) throw InvalidConfig("bjorck_orthonormalize: negative iteration count");
  const double sigma = spectral_norm_estimate(w);
  if (sigma == 0.0 || !std::isfinite(sigma))
    throw NumericError("bjorck_orthonormalize: degenerate matrix");
  Mat a = w / sigma;
  const bool tall = a.rows() >= a.cols();
  Mat gram;
  for (int k = 0; k < iterations; ++k) {
    if (tall) {
      gram.noalias() = a.transpose().lazyProduct(a);
      a = (1.0 + beta) * a - beta * a.lazyProduct(gram);
    } else {
      gram.noalias() = a.lazyProduct(a.transpose());
      a = (1.0 + beta) * a - beta * gram.lazyProduct(a);
    }
  }
  if (!a.allFinite()) throw NumericError("bjorck_orthonormalize: iteration diverged");
  return a;
}

}  // namespace cosdf::nn
