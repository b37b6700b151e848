#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "cosdf/nlp/multistart.hpp"
#include "cosdf/nlp/solver.hpp"

using namespace cosdf;
using namespace cosdf::nlp;
using Catch::Approx;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

// min |x - target|^2 s.t. |x - center|^2 <= r^2, inside a box.
NlpProblem ball_projection(const Vec& target, const Vec& center, double radius, double box) {
  NlpProblem p;
  p.dim = static_cast<int>(target.size());
  p.lower = Vec::Constant(p.dim, -box);
  p.upper = Vec::Constant(p.dim, box);
  p.n_ineq = 1;
  p.objective = [target](const Vec& x, Vec& g) {
    g = 2.0 * (x - target);
    return (x - target).squaredNorm();
  };
  p.constraints = [center, radius](const Vec& x, Vec& gi, Mat& ji, Vec&, Mat&) {
    gi[0] = (x - center).squaredNorm() - radius * radius;
    ji.row(0) = 2.0 * (x - center).transpose();
  };
  return p;
}

Vec analytic_ball_projection(const Vec& target, const Vec& center, double radius) {
  const Vec d = target - center;
  if (d.norm() <= radius) return target;
  return center + radius * d / d.norm();
}

NlpProblem rosenbrock() {
  NlpProblem p = NlpProblem::unbounded(2);
  p.objective = [](const Vec& x, Vec& g) {
    const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
    g[0] = -2.0 * a - 400.0 * x[0] * b;
    g[1] = 200.0 * b;
    return a * a + 100.0 * b * b;
  };
  return p;
}

NlpProblem cosine_wells() {
  NlpProblem p;
  p.dim = 1;
  p.lower = vec({0.0});
  p.upper = vec({2.0});
  p.objective = [](const Vec& x, Vec& g) {
    const double w = 3.0 * std::numbers::pi;
    g[0] = -w * std::sin(w * x[0]);
    return std::cos(w * x[0]);
  };
  return p;
}

}  // namespace

TEST_CASE("solve projects (2,0) onto the unit disk", "[nlp]") {
  NlpProblem p = ball_projection(vec({2.0, 0.0}), vec({0.0, 0.0}), 1.0, 10.0);
  const NlpSolution s = solve(p, vec({0.0, 0.0}));
  CHECK(s.status == NlpStatus::Converged);
  CHECK(s.x[0] == Approx(1.0).margin(1e-6));
  CHECK(s.x[1] == Approx(0.0).margin(1e-6));
  CHECK(s.f == Approx(1.0).margin(1e-6));
  CHECK(s.max_violation <= 1e-6);
  CHECK(s.stationarity <= 1e-6);
  CHECK(s.ineq_multipliers[0] == Approx(1.0).margin(1e-4));
}

TEST_CASE("solve stops at an active lower bound", "[nlp]") {
  NlpProblem p;
  p.dim = 1;
  p.lower = vec({0.5});
  p.upper = vec({kInf});
  p.objective = [](const Vec& x, Vec& g) {
    g[0] = 1.0;
    return x[0];
  };
  const NlpSolution s = solve(p, vec({3.0}));
  CHECK(s.status == NlpStatus::Converged);
  CHECK(s.x[0] == 0.5);
}

TEST_CASE("solve handles x >= 0.5 written as a general constraint", "[nlp]") {
  NlpProblem p = NlpProblem::unbounded(1);
  p.n_ineq = 1;
  p.objective = [](const Vec& x, Vec& g) {
    g[0] = 1.0;
    return x[0];
  };
  p.constraints = [](const Vec& x, Vec& gi, Mat& ji, Vec&, Mat&) {
    gi[0] = 0.5 - x[0];
    ji(0, 0) = -1.0;
  };
  const NlpSolution s = solve(p, vec({2.0}));
  CHECK(s.status == NlpStatus::Converged);
  CHECK(s.x[0] == Approx(0.5).margin(1e-6));
}

TEST_CASE("solve finds the Rosenbrock minimizer", "[nlp]") {
  const NlpSolution s = solve(rosenbrock(), vec({-1.2, 1.0}));
  CHECK(s.status == NlpStatus::Converged);
  CHECK(s.x[0] == Approx(1.0).margin(1e-4));
  CHECK(s.x[1] == Approx(1.0).margin(1e-4));
}

TEST_CASE("solve respects equality constraints with their own multipliers", "[nlp]") {
  // min x^2 + y^2 s.t. x + y = 1 -> (0.5, 0.5), multiplier -1.
  NlpProblem p = NlpProblem::unbounded(2);
  p.n_eq = 1;
  p.objective = [](const Vec& x, Vec& g) {
    g = 2.0 * x;
    return x.squaredNorm();
  };
  p.constraints = [](const Vec& x, Vec&, Mat&, Vec& e, Mat& je) {
    e[0] = x[0] + x[1] - 1.0;
    je << 1.0, 1.0;
  };
  const NlpSolution s = solve(p, vec({3.0, -2.0}));
  CHECK(s.status == NlpStatus::Converged);
  CHECK(s.x[0] == Approx(0.5).margin(1e-6));
  CHECK(s.x[1] == Approx(0.5).margin(1e-6));
  CHECK(s.eq_multipliers[0] == Approx(-1.0).margin(1e-4));
}

TEST_CASE("solve matches analytic ball projections", "[nlp][property]") {
  Rng rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    const int dim = 1 + trial % 6;
    Vec center(dim), target(dim);
    for (int i = 0; i < dim; ++i) {
      center[i] = rng.uniform(-1.0, 1.0);
      target[i] = rng.uniform(-3.0, 3.0);
    }
    const double radius = rng.uniform(0.2, 1.5);
    NlpProblem p = ball_projection(target, center, radius, 5.0);
    const Vec x0 = rng.uniform_in_box(p.lower, p.upper);
    // f moves by |grad f| * |dx|, so f to 1e-6 needs x well below that.
    NlpOptions opts;
    opts.feasibility_tol = 1e-10;
    opts.optimality_tol = 1e-10;
    const NlpSolution s = solve(p, x0, opts);
    const Vec expected = analytic_ball_projection(target, center, radius);
    INFO("trial " << trial << " viol " << s.max_violation << " stat " << s.stationarity << " outer " << s.outer_iterations << " it " << s.iterations);
    CHECK(s.status == NlpStatus::Converged);
    CHECK((s.x - expected).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(std::abs(s.f - (expected - target).squaredNorm()) <= 1e-6);
  }
}

TEST_CASE("solve never leaves the box", "[nlp][property]") {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    // Unconstrained quadratic whose minimizer lies outside the box.
    const int dim = 3;
    Vec target(dim);
    for (int i = 0; i < dim; ++i) target[i] = rng.uniform(-4.0, 4.0);
    NlpProblem p;
    p.dim = dim;
    p.lower = Vec::Constant(dim, -1.0);
    p.upper = Vec::Constant(dim, 0.7);
    p.objective = [target](const Vec& x, Vec& g) {
      g = 2.0 * (x - target);
      return (x - target).squaredNorm();
    };
    const Vec x0 = Vec::Constant(dim, 10.0);  // clipped on entry
    int outside = 0;
    p.objective = [target, &p, &outside](const Vec& x, Vec& g) {
      if ((x.array() < p.lower.array()).any() || (x.array() > p.upper.array()).any()) ++outside;
      g = 2.0 * (x - target);
      return (x - target).squaredNorm();
    };
    const NlpSolution s = solve(p, x0);
    CHECK(outside == 0);
    CHECK((s.x.array() >= p.lower.array()).all());
    CHECK((s.x.array() <= p.upper.array()).all());
    const Vec expected = target.cwiseMax(p.lower).cwiseMin(p.upper);
    CHECK((s.x - expected).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("solve reports non-finite callbacks as NumericError", "[nlp]") {
  NlpProblem p = NlpProblem::unbounded(1);
  p.objective = [](const Vec& x, Vec& g) {
    g[0] = 1.0;
    return std::log(x[0]);  // NaN left of zero
  };
  const NlpSolution at_start = solve(p, vec({-1.0}));
  CHECK(at_start.status == NlpStatus::NumericError);

  NlpProblem q = NlpProblem::unbounded(1);
  q.objective = [](const Vec&, Vec& g) {
    g[0] = std::nan("");
    return 0.0;
  };
  CHECK(solve(q, vec({0.0})).status == NlpStatus::NumericError);
}

TEST_CASE("solve reports infeasible problems", "[nlp]") {
  // x <= -1 and x >= 1 cannot both hold.
  NlpProblem p;
  p.dim = 1;
  p.lower = vec({-5.0});
  p.upper = vec({5.0});
  p.n_ineq = 2;
  p.objective = [](const Vec& x, Vec& g) {
    g[0] = 0.0;
    return 0.0 * x[0];
  };
  p.constraints = [](const Vec& x, Vec& gi, Mat& ji, Vec&, Mat&) {
    gi << x[0] + 1.0, 1.0 - x[0];
    ji << 1.0, -1.0;
  };
  NlpOptions opts;
  opts.max_outer = 10;
  const NlpSolution s = solve(p, vec({3.0}), opts);
  CHECK(s.status == NlpStatus::Infeasible);
  CHECK(s.max_violation == Approx(1.0).margin(1e-3));
}

TEST_CASE("solve reports accepted iterates", "[nlp]") {
  int calls = 0;
  NlpOptions opts;
  opts.on_iterate = [&](const Vec&) { ++calls; };
  const NlpSolution s = solve(rosenbrock(), vec({-1.2, 1.0}), opts);
  CHECK(calls == s.iterations);
  CHECK(calls > 0);
}

TEST_CASE("multistart finds the global cosine well", "[nlp]") {
  // Local minima of cos(3 pi x) on [0, 2]: x = 1/3, 1 and 5/3, all at -1,
  // plus the bound x = 2 at +1 is a maximum. Every interior well reaches -1.
  const NlpSolution s = multistart_solve(cosine_wells(), 15, 99);
  CHECK(s.status == NlpStatus::Converged);
  CHECK(s.f == Approx(-1.0).margin(1e-6));
  const double k = s.x[0] * 3.0;
  CHECK(std::abs(k - std::round(k)) <= 1e-3);
  CHECK(static_cast<int>(std::round(k)) % 2 == 1);
}

TEST_CASE("multistart picks the deepest of unequal wells", "[nlp]") {
  // cos(3 pi x) - 0.1 x on [0, 2]: the well near x = 5/3 is deepest.
  NlpProblem p = cosine_wells();
  p.objective = [](const Vec& x, Vec& g) {
    const double w = 3.0 * std::numbers::pi;
    g[0] = -w * std::sin(w * x[0]) - 0.1;
    return std::cos(w * x[0]) - 0.1 * x[0];
  };
  // Stationary point of the deepest well by Newton on the derivative.
  double x = 5.0 / 3.0;
  const double w = 3.0 * std::numbers::pi;
  for (int i = 0; i < 30; ++i) x -= (-w * std::sin(w * x) - 0.1) / (-w * w * std::cos(w * x));
  const NlpSolution s = multistart_solve(p, 15, 3);
  CHECK(s.x[0] == Approx(x).margin(1e-5));
  CHECK(s.f == Approx(std::cos(w * x) - 0.1 * x).margin(1e-8));
}

TEST_CASE("multistart agrees with single start on a convex problem", "[nlp]") {
  NlpProblem p = ball_projection(vec({2.0, 1.0, -0.5}), vec({0.1, 0.0, 0.0}), 0.8, 3.0);
  const NlpSolution single = solve(p, Vec::Zero(3));
  const NlpSolution multi = multistart_solve(p, 6, 11);
  CHECK((single.x - multi.x).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("multistart is deterministic and monotone", "[nlp][property]") {
  NlpProblem p = cosine_wells();
  p.objective = [](const Vec& x, Vec& g) {
    const double w = 3.0 * std::numbers::pi;
    g[0] = -w * std::sin(w * x[0]) + 0.3;
    return std::cos(w * x[0]) + 0.3 * x[0];
  };
  const NlpSolution a = multistart_solve(p, 1, 42);
  const NlpSolution b = multistart_solve(p, 1, 42);
  CHECK(a.x[0] == b.x[0]);
  CHECK(a.f == b.f);

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const NlpSolution best = multistart_solve(p, 8, seed);
    Rng rng(seed);
    for (int r = 0; r < 8; ++r) {
      const NlpSolution one = solve(p, rng.uniform_in_box(p.lower, p.upper));
      if (one.status == NlpStatus::Converged) CHECK(best.f <= one.f);
    }
  }
}

TEST_CASE("multistart uses the supplied first start", "[nlp]") {
  NlpProblem p = cosine_wells();
  // A single restart from x = 1.05 must land in the middle well.
  const NlpSolution s = multistart_solve(p, 1, 0, {}, vec({1.05}));
  CHECK(s.x[0] == Approx(1.0).margin(1e-5));
}

TEST_CASE("multistart reports NumericError only when every start fails", "[nlp]") {
  NlpProblem p;
  p.dim = 1;
  p.lower = vec({-1.0});
  p.upper = vec({1.0});
  p.objective = [](const Vec& x, Vec& g) {
    g[0] = 0.0;
    return x[0] < 2.0 ? std::nan("") : 0.0;
  };
  CHECK(multistart_solve(p, 4, 1).status == NlpStatus::NumericError);
  p.objective = [](const Vec& x, Vec& g) {
    g[0] = 2.0 * x[0];
    return x[0] < -0.5 ? std::nan("") : x[0] * x[0];
  };
  const NlpSolution s = multistart_solve(p, 6, 1);
  CHECK(s.status == NlpStatus::Converged);
  CHECK(s.x[0] == Approx(0.0).margin(1e-6));
  CHECK_THROWS_AS(multistart_solve(p, 0, 1), InvalidConfig);
}
