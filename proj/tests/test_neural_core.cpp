#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "cosdf/nn/adam.hpp"
#include "cosdf/nn/bjorck.hpp"
#include "cosdf/nn/network.hpp"
#include "cosdf/nn/serialize.hpp"
#include "cosdf/nn/tape.hpp"
#include "cosdf/sdf/losses.hpp"
#include "fd_oracle.hpp"

using namespace cosdf;
using namespace cosdf::nn;
using Catch::Approx;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

Mat random_matrix(Rng& rng, int r, int c) {
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rng.normal();
  return m;
}

NetworkConfig lipschitz_config(int in, std::vector<int> hidden) {
  NetworkConfig cfg;
  cfg.layer_widths.push_back(in);
  for (int w : hidden) cfg.layer_widths.push_back(w);
  cfg.layer_widths.push_back(1);
  return cfg;
}

NetworkConfig tanh_config(int in, std::vector<int> hidden) {
  NetworkConfig cfg = lipschitz_config(in, std::move(hidden));
  cfg.activation = Activation::Tanh;
  cfg.lipschitz = false;
  return cfg;
}

}  // namespace

TEST_CASE("group_sort sorts each group ascending", "[neural-core][group_sort]") {
  CHECK(group_sort(vec({2, 1}), 1) == vec({1, 2}));
  CHECK(group_sort(vec({-1.2, 0.3, 0.7}), 1) == vec({-1.2, 0.3, 0.7}));
  CHECK(group_sort(vec({3, 1, 4, 2}), 2) == vec({1, 3, 2, 4}));
  CHECK_THROWS_AS(group_sort(vec({1, 2, 3}), 2), InvalidConfig);
}

TEST_CASE("group_sort output is a permutation of its input", "[neural-core][group_sort][property]") {
  Rng rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    const int groups = 1 + static_cast<int>(rng.next() % 4);
    const int n = groups * (1 + static_cast<int>(rng.next() % 6));
    Vec x(n);
    for (int i = 0; i < n; ++i) x[i] = std::round(rng.uniform(-3, 3) * 2) / 2;  // forces ties
    std::vector<int> perm;
    const Vec y = group_sort(x, groups, &perm);
    std::vector<double> a(x.data(), x.data() + n), b(y.data(), y.data() + n);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    REQUIRE(a == b);
    for (int i = 0; i < n; ++i) REQUIRE(y[i] == x[perm[i]]);
    const int size = n / groups;
    for (int g = 0; g < groups; ++g)
      for (int i = 1; i < size; ++i) REQUIRE(y[g * size + i - 1] <= y[g * size + i]);
  }
}

TEST_CASE("bjorck keeps orthogonal matrices fixed", "[neural-core][bjorck]") {
  const Mat eye = Mat::Identity(5, 5);
  CHECK((bjorck_orthonormalize(eye) - eye).cwiseAbs().maxCoeff() < 1e-14);

  Rng rng(3);
  const Mat q = Eigen::HouseholderQR<Mat>(random_matrix(rng, 6, 6)).householderQ();
  CHECK((bjorck_orthonormalize(q) - q).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("bjorck orthonormalizes spectrally scaled random matrices", "[neural-core][bjorck]") {
  // Fifteen order-1 steps grow the smallest singular value by at most
  // 1.5^15, so the claim is for conditioning well inside that range.
  Rng rng(11);
  int tested = 0;
  while (tested < 20) {
    Mat w = random_matrix(rng, 8, 8);
    const Vec sv = Eigen::JacobiSVD<Mat>(w).singularValues();
    if (sv[0] / sv[7] > 100.0) continue;
    w /= sv[0];
    CHECK(gram_deviation(bjorck_orthonormalize(w)) <= 1e-3);
    ++tested;
  }
  // Tall and wide shapes use the matching Gram matrix.
  CHECK(gram_deviation(bjorck_orthonormalize(random_matrix(rng, 12, 3))) <= 1e-3);
  CHECK(gram_deviation(bjorck_orthonormalize(random_matrix(rng, 1, 12))) <= 1e-3);
}

TEST_CASE("bjorck applied twice equals once", "[neural-core][bjorck][property]") {
  Rng rng(5);
  for (int k = 0; k < 20; ++k) {
    const Mat q = Eigen::HouseholderQR<Mat>(random_matrix(rng, 8, 8)).householderQ();
    const Mat w = q + 0.2 * random_matrix(rng, 8, 8) / std::sqrt(8.0);
    const Mat once = bjorck_orthonormalize(w);
    const Mat twice = bjorck_orthonormalize(once);
    CHECK((twice - once).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("bjorck rejects non-finite weights", "[neural-core][bjorck]") {
  Mat w = Mat::Identity(3, 3);
  w(1, 2) = std::nan("");
  CHECK_THROWS_AS(bjorck_orthonormalize(w), NumericError);
}

TEST_CASE("forward composes affine maps and activations", "[neural-core][forward]") {
  SECTION("zero network outputs zero") {
    NetworkConfig cfg = tanh_config(3, {4, 4});
    Network net = Network::initialize(cfg, 1);
    for (auto& L : net.layers()) {
      L.weights.setZero();
      L.biases.setZero();
    }
    CHECK(net.value(vec({0.3, -2, 5})) == 0.0);
  }
  SECTION("single identity layer is the identity map") {
    NetworkConfig cfg;
    cfg.layer_widths = {3, 3};
    DenseLayer L{Mat::Identity(3, 3), Vec::Zero(3), true};
    Network net(cfg, {L});
    const Vec z = vec({0.1, -4, 2.5});
    CHECK(net.forward(z) == z);
  }
  SECTION("seeded networks are deterministic") {
    const auto cfg = lipschitz_config(3, {12, 12, 12});
    const Vec z = vec({0.4, 1.1, -0.7});
    CHECK(Network::initialize(cfg, 42).value(z) == Network::initialize(cfg, 42).value(z));
  }
  SECTION("shape mismatch is rejected") {
    Network net = Network::initialize(lipschitz_config(3, {4}), 1);
    CHECK_THROWS_AS(net.forward(vec({1, 2})), InvalidInput);
  }
}

TEST_CASE("tape input gradient matches finite differences", "[neural-core][tape]") {
  for (auto cfg : {lipschitz_config(3, {8, 8}), tanh_config(3, {8, 8})}) {
    Network net = testing::random_network(cfg, 17);
    const Vec z = vec({0.3, -0.8, 1.2});
    const auto [h, g] = value_and_input_gradient(net, z);
    CHECK(h == Approx(net.value(z)).epsilon(1e-14));
    const Vec fd = testing::fd_gradient([&](const Vec& x) { return net.value(x); }, z);
    CHECK(testing::relative_error(g, fd) < 1e-6);
  }
}

TEST_CASE("parameter gradients: analytic special cases", "[neural-core][grad]") {
  SECTION("h^2 at a zero of h has zero gradient") {
    Network net = testing::random_network(tanh_config(2, {4}), 3);
    const Vec z = vec({0.2, 0.4});
    net.layers().back().biases[0] -= net.value(z);
    InputGradientTape tape;
    tape.forward(net, z, false);
    ParamGrad grad = ParamGrad::zeros_like(net);
    tape.backward(2.0 * tape.value(), Vec(), grad);
    CHECK(flatten(grad).cwiseAbs().maxCoeff() < 1e-14);
  }
  SECTION("|grad h|^2 of a linear layer has gradient 2w") {
    NetworkConfig cfg;
    cfg.layer_widths = {3, 1};
    cfg.lipschitz = false;
    const Vec w = vec({0.5, -1.5, 2.0});
    Network net(cfg, {DenseLayer{w.transpose(), Vec::Zero(1), false}});
    InputGradientTape tape;
    tape.forward(net, vec({1, 2, 3}), true);
    ParamGrad grad = ParamGrad::zeros_like(net);
    tape.backward(0.0, 2.0 * tape.input_gradient(), grad);
    CHECK((grad.weights[0].row(0).transpose() - 2.0 * w).norm() < 1e-14);
    CHECK(grad.biases[0][0] == 0.0);
  }
}

TEST_CASE("parameter gradients match finite differences", "[neural-core][grad][oracle]") {
  Rng rng(2024);
  for (int trial = 0; trial < 10; ++trial) {
    const bool lipschitz = trial % 2 == 0;
    const auto cfg = lipschitz ? lipschitz_config(2, {6, 6}) : tanh_config(2, {6, 6});
    Network net = testing::random_network(cfg, 100 + static_cast<std::uint64_t>(trial));
    Vec z;
    std::optional<Vec> fd;
    auto residual = [&](const Network& n) {
      sdf::SdfLossEvaluator e;
      return e.sdf_residual(n, z, nullptr);
    };
    do {
      z = rng.uniform_in_box(Vec::Constant(2, -1.5), Vec::Constant(2, 1.5));
      fd = testing::fd_param_gradient_smooth(net, residual);
    } while (!fd);

    // A mixed loss: h(z)^2 + sum(grad h) * h + |grad h|^2.
    auto loss = [&](const Network& n) {
      const auto [h, g] = value_and_input_gradient(n, z);
      return h * h + g.sum() * h + g.squaredNorm();
    };
    InputGradientTape tape;
    tape.forward(net, z, true);
    const double h = tape.value();
    const Vec g = tape.input_gradient();
    ParamGrad grad = ParamGrad::zeros_like(net);
    tape.backward(2 * h + g.sum(), Vec::Constant(g.size(), h) + 2.0 * g, grad);
    CHECK(testing::relative_error(flatten(grad), testing::fd_param_gradient(net, loss)) < 1e-4);

    sdf::SdfLossEvaluator ev;
    ParamGrad rg = ParamGrad::zeros_like(net);
    ev.sdf_residual(net, z, &rg);
    CHECK(testing::relative_error(flatten(rg), *fd) < 1e-4);
  }
}

TEST_CASE("adam follows the bias-corrected update", "[neural-core][adam]") {
  SECTION("zero gradient leaves parameters unchanged") {
    Vec p = vec({1, -2});
    AdamState st;
    adam_update(p, Vec::Zero(2), st);
    CHECK(p == vec({1, -2}));
    CHECK(st.step == 1);
  }
  SECTION("first step moves by lr * g / (|g| + eps)") {
    Vec p = vec({0.0, 0.0});
    const Vec g = vec({0.3, -2.0});
    AdamState st;
    st.learning_rate = 0.01;
    adam_update(p, g, st);
    for (int i = 0; i < 2; ++i) CHECK(p[i] == Approx(-0.01 * g[i] / (std::abs(g[i]) + 1e-8)).epsilon(1e-12));
  }
  SECTION("quadratic bowl shrinks |theta|") {
    Vec p = vec({1.0});
    AdamState st;
    for (int k = 0; k < 200; ++k) adam_update(p, p, st);
    CHECK(std::abs(p[0]) < 1.0);
    CHECK(st.step == 200);
  }
  SECTION("network step re-orthonormalizes lipschitz layers") {
    Network net = Network::initialize(lipschitz_config(3, {8, 8}), 9);
    ParamGrad g = ParamGrad::zeros_like(net);
    Rng rng(1);
    for (auto& w : g.weights) w = random_matrix(rng, static_cast<int>(w.rows()), static_cast<int>(w.cols()));
    AdamState st;
    st.learning_rate = 0.05;
    adam_step(net, g, st);
    for (const auto& L : net.layers()) CHECK(gram_deviation(L.weights) <= 1e-3);
  }
  SECTION("shape mismatch is rejected") {
    Vec p = vec({1.0, 2.0});
    AdamState st;
    CHECK_THROWS_AS(adam_update(p, vec({1.0}), st), InvalidInput);
  }
}

TEST_CASE("lipschitz networks are 1-Lipschitz", "[neural-core][lipschitz][property]") {
  Rng rng(77);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Network net = testing::random_network(lipschitz_config(3, {12, 12, 12}), seed);
    for (int k = 0; k < 10000; ++k) {
      const Vec a = rng.uniform_in_box(Vec::Constant(3, -3), Vec::Constant(3, 3));
      const Vec b = rng.uniform_in_box(Vec::Constant(3, -3), Vec::Constant(3, 3));
      REQUIRE(std::abs(net.value(a) - net.value(b)) <= (1 + 1e-3) * (a - b).norm());
    }
  }
}

TEST_CASE("network JSON round trip is bit exact", "[neural-core][serialize]") {
  Network net = testing::random_network(lipschitz_config(3, {5, 5}), 8);
  const Network back = network_from_json(nlohmann::json::parse(to_json(net).dump()));
  REQUIRE(back.layers().size() == net.layers().size());
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    CHECK(back.layers()[l].weights == net.layers()[l].weights);
    CHECK(back.layers()[l].biases == net.layers()[l].biases);
  }
  CHECK(to_json(back).dump() == to_json(net).dump());
  auto bad = to_json(net);
  bad["version"] = 99;
  CHECK_THROWS_AS(network_from_json(bad), InvalidInput);
}
