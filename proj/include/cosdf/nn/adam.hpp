#pragma once

#include <cmath>

#include "cosdf/core/types.hpp"
#include "cosdf/nn/bjorck.hpp"
#include "cosdf/nn/network.hpp"
#include "cosdf/nn/tape.hpp"

namespace cosdf::nn {

struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step = 0;
  Vec first_moment;
  Vec second_moment;
};

/// Bias-corrected Adam update of a flat parameter vector.
inline void adam_update(Vec& params, const Vec& grads, AdamState& st) {
  if (params.size() != grads.size()) throw InvalidInput("adam: gradient shape mismatch");
  if (!(st.learning_rate > 0.0)) throw InvalidConfig("adam: learning rate must be positive");
  if (st.first_moment.size() == 0) {
    st.first_moment = Vec::Zero(params.size());
    st.second_moment = Vec::Zero(params.size());
  }
  if (st.first_moment.size() != params.size()) throw InvalidInput("adam: state shape mismatch");
  ++st.step;
  st.first_moment = st.beta1 * st.first_moment + (1.0 - st.beta1) * grads;
  st.second_moment = st.beta2 * st.second_moment + (1.0 - st.beta2) * grads.cwiseAbs2();
  const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  params.array() -= st.learning_rate * (st.first_moment.array() / c1) /
                    ((st.second_moment.array() / c2).sqrt() + st.epsilon);
}

inline Vec flatten(const Network& net) {
  Vec p(static_cast<Eigen::Index>(net.parameter_count()));
  Eigen::Index k = 0;
  for (const auto& L : net.layers()) {
    p.segment(k, L.weights.size()) = L.weights.reshaped();
    k += L.weights.size();
    p.segment(k, L.biases.size()) = L.biases;
    k += L.biases.size();
  }
  return p;
}

inline Vec flatten(const ParamGrad& g) {
  Eigen::Index n = 0;
  for (std::size_t l = 0; l < g.weights.size(); ++l) n += g.weights[l].size() + g.biases[l].size();
  Vec p(n);
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    p.segment(k, g.weights[l].size()) = g.weights[l].reshaped();
    k += g.weights[l].size();
    p.segment(k, g.biases[l].size()) = g.biases[l];
    k += g.biases[l].size();
  }
  return p;
}

inline void unflatten(const Vec& p, Network& net) {
  Eigen::Index k = 0;
  for (auto& L : net.layers()) {
    L.weights.reshaped() = p.segment(k, L.weights.size());
    k += L.weights.size();
    L.biases = p.segment(k, L.biases.size());
    k += L.biases.size();
  }
}

/// One Adam step on all network parameters; orthonormalized layers are
/// projected back with Bjorck's iteration after the update.
inline void adam_step(Network& net, const ParamGrad& grad, AdamState& st) {
  Vec p = flatten(net);
  const Vec g = flatten(grad);
  if (g.size() != p.size()) throw InvalidInput("adam_step: gradient shape mismatch");
  adam_update(p, g, st);
  unflatten(p, net);
  for (auto& L : net.layers())
    if (L.orthonormalized) L.weights = bjorck_orthonormalize(L.weights);
}

}  // namespace cosdf::nn
