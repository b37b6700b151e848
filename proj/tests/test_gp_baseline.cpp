#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "cosdf/core/rng.hpp"
#include "cosdf/gp/model.hpp"
#include "fd_oracle.hpp"

using namespace cosdf;
using namespace cosdf::gp;
using Catch::Approx;

namespace {

SeHyper<double> hyper(double s2, std::vector<double> ls) {
  SeHyper<double> h;
  h.signal_variance = s2;
  h.lengthscales = std::move(ls);
  return h;
}

Vec random_point(Rng& rng, int d, double half) {
  Vec x(d);
  for (int i = 0; i < d; ++i) x[i] = rng.uniform(-half, half);
  return x;
}

double quadratic(const Vec& x, Vec* g) {
  // J-like bowl: squared distance beyond the unit ball.
  const double n = x.norm();
  if (n <= 1.0) {
    if (g) g->setZero(x.size());
    return 0.0;
  }
  if (g) *g = 2.0 * (n - 1.0) * x / n;
  return (n - 1.0) * (n - 1.0);
}

std::vector<Observation> bowl_data(Rng& rng, int n, int d) {
  std::vector<Observation> data;
  for (int i = 0; i < n; ++i) {
    Observation o;
    o.x = random_point(rng, d, 2.0);
    o.value = quadratic(o.x, &o.gradient);
    data.push_back(o);
  }
  return data;
}

GpModel conditioned(const std::vector<Observation>& data, int d, double noise = 1e-6, double lengthscale = 0.0) {
  GpModel m = GpModel::for_box(Vec::Constant(d, -2.0), Vec::Constant(d, 2.0));
  m.set_noise(noise);
  if (lengthscale > 0.0) m.set_hyper(hyper(1.0, std::vector<double>(static_cast<std::size_t>(d), lengthscale)));
  m.condition(data);
  return m;
}

}  // namespace

TEST_CASE("kernel blocks at coincident points", "[gp]") {
  const auto h = hyper(2.5, {0.7, 1.3, 0.4});
  const Vec x = Vec::LinSpaced(3, -0.3, 0.8);
  const auto b = se_kernel_blocks(x, x, h);
  CHECK(b.value_value == Approx(2.5));
  CHECK(b.value_grad.cwiseAbs().maxCoeff() == 0.0);
  CHECK(b.grad_value.cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < 3; ++i) CHECK(b.grad_grad(i, i) == Approx(2.5 / (h.lengthscales[i] * h.lengthscales[i])));
}

TEST_CASE("kernel derivative blocks match finite differences", "[gp][fd]") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 1 + trial % 4;
    std::vector<double> ls;
    for (int i = 0; i < d; ++i) ls.push_back(rng.uniform(0.3, 2.0));
    const auto h = hyper(rng.uniform(0.5, 3.0), ls);
    const Vec x1 = random_point(rng, d, 1.0), x2 = random_point(rng, d, 1.0);
    const auto b = se_kernel_blocks(x1, x2, h);
    auto kval = [&](const Vec& a, const Vec& c) { return se_kernel_blocks(a, c, h).value_value; };
    const Vec d_x2 = testing::fd_gradient([&](const Vec& c) { return kval(x1, c); }, x2);
    const Vec d_x1 = testing::fd_gradient([&](const Vec& a) { return kval(a, x2); }, x1);
    CHECK((b.value_grad - d_x2).cwiseAbs().maxCoeff() <= 1e-5);
    CHECK((b.grad_value - d_x1).cwiseAbs().maxCoeff() <= 1e-5);
    for (int j = 0; j < d; ++j) {
      // Column j: d/dx1 of cov(f(x1), df/dx2_j).
      const Vec col = testing::fd_gradient(
          [&](const Vec& a) { return se_kernel_blocks(a, x2, h).value_grad[j]; }, x1);
      CHECK((b.grad_grad.col(j) - col).cwiseAbs().maxCoeff() <= 1e-5);
    }
  }
}

TEST_CASE("kernel rejects non-positive hyperparameters", "[gp]") {
  const Vec x = Vec::Zero(2);
  CHECK_THROWS_AS(se_kernel_blocks(x, x, hyper(0.0, {1.0, 1.0})), InvalidConfig);
  CHECK_THROWS_AS(se_kernel_blocks(x, x, hyper(1.0, {1.0, -1.0})), InvalidConfig);
  CHECK_THROWS_AS(se_kernel_blocks(x, x, hyper(1.0, {1.0})), InvalidConfig);
  CHECK_THROWS_AS(se_kernel_blocks(x, Vec::Zero(3), hyper(1.0, {1.0, 1.0})), InvalidInput);
}

TEST_CASE("stacked covariance is symmetric", "[gp]") {
  Rng rng(8);
  const auto data = bowl_data(rng, 12, 3);
  const Mat k = GpModel::covariance(data, hyper(1.7, {0.5, 0.9, 1.4}));
  CHECK((k - k.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(k.rows() == 12 * 4);
}

TEST_CASE("single observation gives a finite likelihood", "[gp]") {
  Observation o{Vec::Constant(2, 0.3), 0.4, Vec::Constant(2, -0.1)};
  GpModel m = conditioned({o}, 2);
  CHECK(std::isfinite(m.nlml()));
  m.fit_hyperparams();
  CHECK(std::isfinite(m.nlml()));
  CHECK(m.predict(o.x) == Approx(0.4).margin(1e-3));
}

TEST_CASE("likelihood gradient matches finite differences", "[gp][fd]") {
  Rng rng(21);
  const auto data = bowl_data(rng, 8, 2);
  GpModel m = conditioned(data, 2);
  m.set_hyper(hyper(1.3, {0.8, 1.1}));
  m.condition(data);
  const Vec g = m.nlml_gradient();
  auto at = [&](const Vec& theta) {
    GpModel c = m;
    c.set_hyper(hyper(std::exp(theta[0]), {std::exp(theta[1]), std::exp(theta[2])}));
    c.condition(data);
    return c.nlml();
  };
  const Vec theta = Vec{{std::log(1.3), std::log(0.8), std::log(1.1)}};
  const Vec fd = testing::fd_gradient(at, theta, 1e-5);
  CHECK(testing::relative_error(g, fd) <= 1e-5);
}

TEST_CASE("posterior interpolates noise-free observations", "[gp]") {
  Rng rng(4);
  const auto data = bowl_data(rng, 10, 2);
  GpModel m = conditioned(data, 2, 0.0, 0.6);
  INFO("jitter " << m.jitter());
  for (const Observation& o : data) {
    Vec g;
    CHECK(m.predict(o.x, &g) == Approx(o.value).margin(1e-6));
    CHECK((g - o.gradient).cwiseAbs().maxCoeff() <= 1e-5);
  }
}

TEST_CASE("posterior interpolates with default noise after fitting", "[gp]") {
  Rng rng(12);
  const auto data = bowl_data(rng, 15, 3);
  GpModel m = conditioned(data, 3);
  m.fit_hyperparams();
  for (const Observation& o : data) CHECK(m.predict(o.x) == Approx(o.value).margin(1e-3));
}

TEST_CASE("posterior reverts to the zero prior far from data", "[gp]") {
  Rng rng(6);
  const auto data = bowl_data(rng, 10, 2);
  GpModel m = conditioned(data, 2);
  const double l = *std::max_element(m.hyper().lengthscales.begin(), m.hyper().lengthscales.end());
  Vec g;
  CHECK(std::abs(m.predict(Vec::Constant(2, 2.0 + 10.0 * l), &g)) <= 1e-6);
  CHECK(g.cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("posterior gradient matches finite differences", "[gp][fd]") {
  Rng rng(9);
  const auto data = bowl_data(rng, 12, 3);
  GpModel m = conditioned(data, 3);
  m.fit_hyperparams();
  for (int trial = 0; trial < 20; ++trial) {
    const Vec x = random_point(rng, 3, 2.0);
    Vec g;
    m.predict(x, &g);
    const Vec fd = testing::fd_gradient([&](const Vec& y) { return m.predict(y); }, x);
    CHECK((g - fd).cwiseAbs().maxCoeff() <= 1e-4 * std::max(1.0, fd.norm()));
  }
}

TEST_CASE("predictions do not depend on data order", "[gp][property]") {
  Rng rng(15);
  auto data = bowl_data(rng, 14, 2);
  GpModel a = conditioned(data, 2, 1e-6, 0.6);
  std::reverse(data.begin(), data.end());
  std::swap(data[2], data[9]);
  GpModel b = conditioned(data, 2, 1e-6, 0.6);
  for (int trial = 0; trial < 30; ++trial) {
    const Vec x = random_point(rng, 2, 2.5);
    CHECK(std::abs(a.predict(x) - b.predict(x)) <= 1e-10);
  }
}

TEST_CASE("fitting recovers the lengthscale of prior samples", "[gp]") {
  // 30 joint value/gradient draws from a GP with unit lengthscale.
  Rng rng(77);
  const int n = 30;
  std::vector<Observation> data;
  for (int i = 0; i < n; ++i) data.push_back({Vec::Constant(1, rng.uniform(-5.0, 5.0)), 0.0, Vec::Zero(1)});
  const Mat k = GpModel::covariance(data, hyper(1.0, {1.0})) + 1e-8 * Mat::Identity(2 * n, 2 * n);
  const Mat chol = k.llt().matrixL();
  Vec eps(2 * n);
  for (int i = 0; i < 2 * n; ++i) eps[i] = rng.normal();
  const Vec y = chol * eps;
  for (int i = 0; i < n; ++i) {
    data[static_cast<std::size_t>(i)].value = y[2 * i];
    data[static_cast<std::size_t>(i)].gradient[0] = y[2 * i + 1];
  }

  GpModel m = GpModel::for_box(Vec::Constant(1, -5.0), Vec::Constant(1, 5.0));  // starts at l = 5
  m.condition(data);
  const double start = m.nlml();

  SECTION("default schedule lowers the likelihood") {
    m.fit_hyperparams();
    CHECK(m.nlml() <= start);
    CHECK(m.hyper().lengthscales[0] < 5.0);
  }
  SECTION("a longer schedule lands within a factor of 3") {
    m.fit_hyperparams({400, 0.05});
    const double l = m.hyper().lengthscales[0];
    CHECK(l >= 1.0 / 3.0);
    CHECK(l <= 3.0);
  }
}

TEST_CASE("rejects malformed data", "[gp]") {
  GpModel m = GpModel::for_box(Vec::Constant(2, -1.0), Vec::Constant(2, 1.0));
  CHECK_THROWS_AS(m.condition({}), InvalidInput);
  CHECK_THROWS_AS(m.condition({{Vec::Zero(3), 0.0, Vec::Zero(3)}}), InvalidInput);
  CHECK_THROWS_AS(m.predict(Vec::Zero(2)), InvalidInput);
  CHECK_THROWS_AS(GpModel::for_box(Vec::Zero(2), Vec::Zero(2)), InvalidConfig);
}
