#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "cosdf/core/rng.hpp"
#include "cosdf/core/types.hpp"
#include "cosdf/nn/adam.hpp"
#include "cosdf/nn/network.hpp"
#include "cosdf/sdf/losses.hpp"

namespace cosdf::sdf {

enum class ModelKind { Sdf, JFit, HingeClassifier, Hybrid };

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Sdf: return "SDF";
    case ModelKind::JFit: return "JFit";
    case ModelKind::HingeClassifier: return "HingeClassifier";
    case ModelKind::Hybrid: return "Hybrid";
  }
  return "?";
}

/// Classification threshold for J-regression networks.
inline constexpr double kJFitThreshold = 1e-4;

/// Either a fixed learning rate, or `draws` log-uniform samples in
/// [low, high] with the lowest final data loss winning.
struct LearningRatePolicy {
  bool random_search = false;
  double fixed = 1e-3;
  int draws = 10;
  double low = 1e-5;
  double high = 1e-3;

  static LearningRatePolicy fixed_rate(double lr) { return {false, lr, 1, lr, lr}; }
  static LearningRatePolicy search(int draws = 10, double low = 1e-5, double high = 1e-3) {
    return {true, high, draws, low, high};
  }
};

struct TrainConfig {
  int epochs = 2000;
  LearningRatePolicy learning_rate = LearningRatePolicy::fixed_rate(1e-3);
  double reg_weight = 0.1;
  int reg_samples = 64;
  Vec box_lower;
  Vec box_upper;
  std::vector<int> hidden_widths = {12, 12, 12};
  std::uint64_t seed = 0;

  void validate(Eigen::Index dim) const {
    if (epochs < 0) throw InvalidConfig("epochs must be non-negative");
    if (reg_weight < 0.0) throw InvalidConfig("regularization weight must be non-negative");
    if (reg_samples < 0) throw InvalidConfig("regularization sample count must be non-negative");
    if (learning_rate.random_search) {
      if (learning_rate.draws < 1 || !(learning_rate.low > 0.0) || learning_rate.high < learning_rate.low)
        throw InvalidConfig("invalid learning-rate search range");
    } else if (!(learning_rate.fixed > 0.0)) {
      throw InvalidConfig("learning rate must be positive");
    }
    const bool needs_box = reg_weight > 0.0 && reg_samples > 0;
    if (needs_box) {
      if (box_lower.size() != dim || box_upper.size() != dim)
        throw InvalidConfig("regularization box does not match data dimension");
      if ((box_upper.array() <= box_lower.array()).any())
        throw InvalidConfig("regularization box is empty");
    }
  }
};

/// Feasible iff h(z) <= 0; J-regression networks use h(z) <= 1e-4.
inline bool classify(const nn::Network& net, const Vec& z, ModelKind kind = ModelKind::Sdf) {
  const double h = net.value(z);
  return kind == ModelKind::JFit ? h <= kJFitThreshold : h <= 0.0;
}

/// Fraction of samples whose classify() agrees with the label.
inline double accuracy(const nn::Network& net, const Dataset& data, ModelKind kind) {
  if (data.empty()) return 0.0;
  std::size_t ok = 0;
  for (const auto& s : data) ok += classify(net, s.z, kind) == s.feasible ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(data.size());
}

namespace detail {

inline nn::NetworkConfig network_config(ModelKind kind, Eigen::Index dim, const std::vector<int>& hidden) {
  nn::NetworkConfig cfg;
  cfg.layer_widths.push_back(static_cast<int>(dim));
  for (int w : hidden) cfg.layer_widths.push_back(w);
  cfg.layer_widths.push_back(1);
  if (kind == ModelKind::Sdf) {
    cfg.activation = nn::Activation::GroupSort;
    cfg.group_count = 1;
    cfg.lipschitz = true;
  } else {
    cfg.activation = nn::Activation::Tanh;
    cfg.lipschitz = false;
  }
  return cfg;
}

/// Mean data loss over the dataset; adds its gradient into grad when given.
inline double data_loss(ModelKind kind, const nn::Network& net, const Dataset& data, SdfLossEvaluator& ev,
                        nn::ParamGrad* grad) {
  const double scale = 1.0 / static_cast<double>(data.size());
  double total = 0.0;
  for (const auto& s : data) {
    switch (kind) {
      case ModelKind::Sdf: total += ev.gradient_augmented(net, s, grad, scale); break;
      case ModelKind::Hybrid: total += ev.output_loss(net, s, hybrid_loss, hybrid_loss_slope, grad, scale); break;
      case ModelKind::JFit: total += ev.output_loss(net, s, jfit_loss, jfit_loss_slope, grad, scale); break;
      case ModelKind::HingeClassifier:
        total += ev.output_loss(net, s, hinge_loss, hinge_loss_slope, grad, scale);
        break;
    }
  }
  return total * scale;
}

struct Candidate {
  nn::Network net;
  double final_loss = std::numeric_limits<double>::infinity();
};

inline Candidate train_one(ModelKind kind, const Dataset& data, const TrainConfig& cfg, double lr,
                           std::uint64_t seed) {
  const auto dim = data.front().z.size();
  nn::Network net = nn::Network::initialize(network_config(kind, dim, cfg.hidden_widths), seed);
  nn::AdamState adam;
  adam.learning_rate = lr;
  SdfLossEvaluator ev;
  nn::ParamGrad grad = nn::ParamGrad::zeros_like(net);
  Rng rng(derive_seed(seed, 0x5eed));
  const bool regularize = kind == ModelKind::Sdf && cfg.reg_weight > 0.0 && cfg.reg_samples > 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    grad.set_zero();
    double loss = data_loss(kind, net, data, ev, &grad);
    if (regularize) {
      const double scale = cfg.reg_weight / cfg.reg_samples;
      for (int k = 0; k < cfg.reg_samples; ++k)
        loss += scale * ev.sdf_residual(net, rng.uniform_in_box(cfg.box_lower, cfg.box_upper), &grad, scale);
    }
    if (!std::isfinite(loss) || !grad.all_finite())
      throw NumericError("non-finite training loss at step " + std::to_string(epoch), epoch);
    nn::adam_step(net, grad, adam);
  }
  Candidate c{std::move(net), 0.0};
  c.final_loss = data_loss(kind, c.net, data, ev, nullptr);
  if (!std::isfinite(c.final_loss))
    throw NumericError("non-finite final training loss", cfg.epochs);
  return c;
}

inline nn::Network train(ModelKind kind, const Dataset& data, const TrainConfig& cfg) {
  if (data.empty()) throw InvalidInput("training dataset is empty");
  cfg.validate(data.front().z.size());
  for (const auto& s : data)
    if (s.z.size() != data.front().z.size()) throw InvalidInput("dataset has mixed dimensions");
  if (!cfg.learning_rate.random_search)
    return train_one(kind, data, cfg, cfg.learning_rate.fixed, derive_seed(cfg.seed, 0)).net;

  Rng lr_rng(derive_seed(cfg.seed, 0x1a7e));
  Candidate best;
  bool have = false;
  for (int c = 0; c < cfg.learning_rate.draws; ++c) {
    const double lr = lr_rng.log_uniform(cfg.learning_rate.low, cfg.learning_rate.high);
    Candidate cand = train_one(kind, data, cfg, lr, derive_seed(cfg.seed, static_cast<std::uint64_t>(c)));
    // Strict comparison: ties keep the earliest draw.
    if (!have || cand.final_loss < best.final_loss) {
      best = std::move(cand);
      have = true;
    }
  }
  return std::move(best.net);
}

}  // namespace detail

/// Lipschitz GroupSort network trained on the gradient-augmented loss plus
/// lambda times the SDF regularizer on fresh uniform points each step.
inline nn::Network train_sdf(const Dataset& data, const TrainConfig& cfg) {
  return detail::train(ModelKind::Sdf, data, cfg);
}

/// Tanh network trained on one of the baseline objectives.
inline nn::Network train_baseline(const Dataset& data, ModelKind kind, const TrainConfig& cfg) {
  if (kind == ModelKind::Sdf) throw InvalidConfig("train_baseline: use train_sdf for SDF models");
  return detail::train(kind, data, cfg);
}

inline nn::Network train_model(const Dataset& data, ModelKind kind, const TrainConfig& cfg) {
  return kind == ModelKind::Sdf ? train_sdf(data, cfg) : train_baseline(data, kind, cfg);
}

}  // namespace cosdf::sdf
