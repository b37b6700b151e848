#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace cosdf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// A point in the space of shared (system-level) variables.
using DesignPoint = Eigen::VectorXd;

/// Shapes or hyperparameters that can never be valid.
class InvalidConfig : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Inputs outside an operation's domain.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite values or failed factorizations.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what, long step = -1)
      : std::runtime_error(what), step_(step) {}

  /// Training step (or iteration) at which the failure surfaced, -1 if unknown.
  long step() const noexcept { return step_; }

 private:
  long step_;
};

/// Files that cannot be read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace cosdf
