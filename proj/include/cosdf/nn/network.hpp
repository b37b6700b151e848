#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "cosdf/core/rng.hpp"
#include "cosdf/core/types.hpp"
#include "cosdf/nn/bjorck.hpp"

namespace cosdf::nn {

enum class Activation { Tanh, GroupSort };

inline std::string to_string(Activation a) { return a == Activation::Tanh ? "tanh" : "groupsort"; }

struct NetworkConfig {
  /// Input width, hidden widths, output width.
  std::vector<int> layer_widths;
  Activation activation = Activation::GroupSort;
  /// Number of sort groups per hidden layer; 1 means a full sort.
  int group_count = 1;
  bool lipschitz = true;

  void validate() const {
    if (layer_widths.size() < 2) throw InvalidConfig("network needs at least input and output widths");
    for (int w : layer_widths)
      if (w <= 0) throw InvalidConfig("layer widths must be positive");
    if (activation == Activation::GroupSort) {
      if (group_count <= 0) throw InvalidConfig("group_count must be positive");
      for (std::size_t l = 1; l + 1 < layer_widths.size(); ++l)
        if (layer_widths[l] % group_count != 0)
          throw InvalidConfig("hidden width not divisible by group_count");
    }
    if (lipschitz && activation != Activation::GroupSort)
      throw InvalidConfig("lipschitz networks require GroupSort activations");
  }
};

struct DenseLayer {
  Mat weights;  // out x in
  Vec biases;
  bool orthonormalized = false;

  int in() const { return static_cast<int>(weights.cols()); }
  int out() const { return static_cast<int>(weights.rows()); }
};

/// Sorts each contiguous group ascending. perm (optional) receives, for every
/// output slot, the input index it was taken from.
/// Sorts x within each of group_count contiguous groups into y; perm[i] is
/// the source index of y[i]. Buffers are reused across calls.
inline void group_sort_into(const Vec& x, int group_count, Vec& y, std::vector<int>& perm) {
  const auto n = static_cast<int>(x.size());
  if (group_count <= 0 || n % group_count != 0)
    throw InvalidConfig("group_sort: length " + std::to_string(n) + " not divisible by " +
                        std::to_string(group_count));
  const int size = n / group_count;
  perm.resize(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (int g = 0; g < group_count; ++g) {
    // Stable insertion sort so that ties resolve to a fixed permutation.
    const int first = g * size;
    for (int i = first + 1; i < first + size; ++i) {
      const int v = perm[i];
      int j = i;
      for (; j > first && x[v] < x[perm[j - 1]]; --j) perm[j] = perm[j - 1];
      perm[j] = v;
    }
  }
  y.resize(n);
  for (int i = 0; i < n; ++i) y[i] = x[perm[i]];
}

inline Vec group_sort(const Vec& x, int group_count, std::vector<int>* perm = nullptr) {
  Vec y;
  std::vector<int> idx;
  group_sort_into(x, group_count, y, idx);
  if (perm) *perm = std::move(idx);
  return y;
}

/// Dense feedforward network with activations on every hidden layer and a
/// linear output layer.
class Network {
 public:
  Network() = default;

  Network(NetworkConfig config, std::vector<DenseLayer> layers)
      : config_(std::move(config)), layers_(std::move(layers)) {
    config_.validate();
    if (layers_.size() + 1 != config_.layer_widths.size())
      throw InvalidConfig("layer count does not match layer_widths");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto& L = layers_[l];
      if (L.in() != config_.layer_widths[l] || L.out() != config_.layer_widths[l + 1] ||
          L.biases.size() != L.out())
        throw InvalidConfig("layer " + std::to_string(l) + " shape mismatch");
    }
  }

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases, then
  /// Bjorck projection for lipschitz networks.
  static Network initialize(const NetworkConfig& config, std::uint64_t seed) {
    config.validate();
    Rng rng(seed);
    std::vector<DenseLayer> layers;
    for (std::size_t l = 0; l + 1 < config.layer_widths.size(); ++l) {
      const int in = config.layer_widths[l];
      const int out = config.layer_widths[l + 1];
      const double bound = 1.0 / std::sqrt(static_cast<double>(in));
      DenseLayer layer;
      layer.weights.resize(out, in);
      for (int j = 0; j < in; ++j)
        for (int i = 0; i < out; ++i) layer.weights(i, j) = rng.uniform(-bound, bound);
      layer.biases = Vec::Zero(out);
      layer.orthonormalized = config.lipschitz;
      if (layer.orthonormalized) layer.weights = bjorck_orthonormalize(layer.weights);
      layers.push_back(std::move(layer));
    }
    return Network(config, std::move(layers));
  }

  const NetworkConfig& config() const { return config_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  int input_dim() const { return config_.layer_widths.front(); }
  int output_dim() const { return config_.layer_widths.back(); }
  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& L : layers_) n += L.weights.size() + L.biases.size();
    return n;
  }

  Vec forward(const Vec& z) const {
    if (z.size() != input_dim())
      throw InvalidInput("forward: expected input of size " + std::to_string(input_dim()) +
                         ", got " + std::to_string(z.size()));
    Vec a = z;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Vec pre = layers_[l].weights * a + layers_[l].biases;
      if (l + 1 == layers_.size()) return pre;
      a = activate(pre);
    }
    return a;
  }

  /// Scalar output h(z) of a single-output network.
  double value(const Vec& z) const { return forward(z)[0]; }

  Vec activate(const Vec& pre) const {
    if (config_.activation == Activation::Tanh) return pre.array().tanh().matrix();
    return group_sort(pre, config_.group_count);
  }

 private:
  NetworkConfig config_;
  std::vector<DenseLayer> layers_;
};

}  // namespace cosdf::nn
