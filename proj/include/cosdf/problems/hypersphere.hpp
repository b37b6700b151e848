#pragma once

#include <memory>
#include <utility>

#include "cosdf/co/discipline.hpp"
#include "cosdf/core/rng.hpp"
#include "cosdf/sdf/sample.hpp"

namespace cosdf::problems {

/// Feasible set is the closed unit ball: |z_copy|^2 - 1 <= 0, no locals.
class HypersphereDiscipline final : public co::Discipline {
 public:
  explicit HypersphereDiscipline(int dim, std::string name = "hypersphere")
      : co::Discipline(std::move(name), dim, Vec(0), Vec(0), 1, 0) {}

 protected:
  void do_evaluate(const Vec& shared, const Vec&, co::ConstraintValues& out) const override {
    out.ineq[0] = shared.squaredNorm() - 1.0;
    out.ineq_jac.row(0) = 2.0 * shared.transpose();
  }
};

/// Exact projection onto the unit ball.
struct BallOracle {
  double j_star(const Vec& z) const {
    const double excess = std::max(0.0, z.norm() - 1.0);
    return excess * excess;
  }
  Vec projection(const Vec& z) const {
    const double n = z.norm();
    return n > 1.0 ? Vec(z / n) : z;
  }
  sdf::LabeledSample label(const Vec& z, double threshold = 1e-6) const {
    return sdf::LabeledSample::from_projection(z, projection(z), threshold);
  }
};

inline constexpr double kHypersphereHalfWidth = 2.0;

struct HypersphereProblem {
  co::CoProblem problem;
  BallOracle oracle;
};

/// Unit-ball discipline on the box [-2, 2]^d with objective f(z) = z_0.
inline HypersphereProblem build_hypersphere_problem(int dim) {
  if (dim < 1) throw InvalidConfig("hypersphere: dimension must be at least 1");
  HypersphereProblem h;
  auto& p = h.problem;
  for (int i = 0; i < dim; ++i) {
    p.names.push_back("z" + std::to_string(i));
    p.units.push_back("-");
  }
  p.lower = Vec::Constant(dim, -kHypersphereHalfWidth);
  p.upper = Vec::Constant(dim, kHypersphereHalfWidth);
  p.objective = [](const Vec& z, Vec& g) {
    g.setZero(z.size());
    g[0] = 1.0;
    return z[0];
  };
  p.disciplines.push_back(std::make_shared<HypersphereDiscipline>(dim));
  return h;
}

struct DiskDatasets {
  sdf::Dataset train;
  sdf::Dataset test;
};

/// Uniform samples in [-2, 2]^d labelled by the exact ball projection.
inline DiskDatasets make_disk_dataset(int dim, int n_train, int n_test, std::uint64_t seed) {
  if (dim < 1 || n_train < 0 || n_test < 0) throw InvalidConfig("disk dataset: bad sizes");
  Rng rng(seed);
  const Vec lo = Vec::Constant(dim, -kHypersphereHalfWidth), hi = Vec::Constant(dim, kHypersphereHalfWidth);
  const BallOracle oracle;
  DiskDatasets out;
  for (int i = 0; i < n_train; ++i) out.train.push_back(oracle.label(rng.uniform_in_box(lo, hi)));
  for (int i = 0; i < n_test; ++i) out.test.push_back(oracle.label(rng.uniform_in_box(lo, hi)));
  return out;
}

/// One-dimensional feasible set z >= 0, whose exact SDF is h(z) = -z.
struct Halfline {
  static double sdf(double z) { return -z; }
  static sdf::LabeledSample label(double z) {
    Vec p(1);
    p[0] = z;
    Vec proj(1);
    proj[0] = std::max(z, 0.0);
    return sdf::LabeledSample::from_projection(p, proj, 0.0);
  }
  /// n evenly spaced points over [lo, hi].
  static sdf::Dataset dataset(int n, double lo = -2.0, double hi = 2.0) {
    sdf::Dataset d;
    for (int i = 0; i < n; ++i) d.push_back(label(n == 1 ? lo : lo + (hi - lo) * i / (n - 1)));
    return d;
  }
};

}  // namespace cosdf::problems
