#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "cosdf/nn/network.hpp"

namespace cosdf::nn {

inline constexpr int kNetworkFormatVersion = 1;

/// Versioned JSON document. Weights are stored row-major; doubles are written
/// in shortest round-trip form, so parsing reproduces every bit.
inline nlohmann::json to_json(const Network& net) {
  nlohmann::json j;
  j["format"] = "cosdf.network";
  j["version"] = kNetworkFormatVersion;
  j["layer_widths"] = net.config().layer_widths;
  j["activation"] = to_string(net.config().activation);
  j["group_count"] = net.config().group_count;
  j["lipschitz"] = net.config().lipschitz;
  auto& layers = j["layers"] = nlohmann::json::array();
  for (const auto& L : net.layers()) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(L.weights.size()));
    for (Eigen::Index r = 0; r < L.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < L.weights.cols(); ++c) w.push_back(L.weights(r, c));
    layers.push_back({{"weights", w},
                      {"biases", std::vector<double>(L.biases.data(), L.biases.data() + L.biases.size())},
                      {"orthonormalized", L.orthonormalized}});
  }
  return j;
}

inline Network network_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "cosdf.network") throw InvalidInput("not a cosdf network document");
  if (j.at("version").get<int>() != kNetworkFormatVersion)
    throw InvalidInput("unsupported network format version");
  NetworkConfig cfg;
  cfg.layer_widths = j.at("layer_widths").get<std::vector<int>>();
  const auto act = j.at("activation").get<std::string>();
  if (act == "tanh") cfg.activation = Activation::Tanh;
  else if (act == "groupsort") cfg.activation = Activation::GroupSort;
  else throw InvalidInput("unknown activation '" + act + "'");
  cfg.group_count = j.at("group_count").get<int>();
  cfg.lipschitz = j.at("lipschitz").get<bool>();
  cfg.validate();
  const auto& jl = j.at("layers");
  if (jl.size() + 1 != cfg.layer_widths.size()) throw InvalidInput("layer count mismatch");
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l < jl.size(); ++l) {
    const int in = cfg.layer_widths[l], out = cfg.layer_widths[l + 1];
    const auto w = jl[l].at("weights").get<std::vector<double>>();
    const auto b = jl[l].at("biases").get<std::vector<double>>();
    if (w.size() != static_cast<std::size_t>(in * out) || b.size() != static_cast<std::size_t>(out))
      throw InvalidInput("layer " + std::to_string(l) + " has wrong parameter count");
    DenseLayer L;
    L.weights.resize(out, in);
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) L.weights(r, c) = w[static_cast<std::size_t>(r * in + c)];
    L.biases = Eigen::Map<const Vec>(b.data(), out);
    L.orthonormalized = jl[l].at("orthonormalized").get<bool>();
    layers.push_back(std::move(L));
  }
  return Network(cfg, std::move(layers));
}

inline void save_network(const Network& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << to_json(net).dump(2) << '\n';
}

inline Network load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  return network_from_json(nlohmann::json::parse(in));
}

}  // namespace cosdf::nn
