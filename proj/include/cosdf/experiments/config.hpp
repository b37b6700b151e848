#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "cosdf/core/types.hpp"
#include "cosdf/nlp/problem.hpp"
#include "cosdf/sdf/train.hpp"

namespace cosdf::experiments {

inline constexpr const char* kToolkitVersion = "1.0.0";

enum class Experiment { DiskBenchmark, Aircraft, TrainSdf };

inline std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::DiskBenchmark: return "disk-benchmark";
    case Experiment::Aircraft: return "aircraft";
    case Experiment::TrainSdf: return "train-sdf";
  }
  return "?";
}

/// Optional overrides of the training defaults; unset fields keep them.
struct TrainOverrides {
  std::optional<int> epochs;
  std::optional<double> learning_rate;
  std::optional<int> learning_rate_draws;
  std::optional<double> reg_weight;
  std::optional<int> reg_samples;
  std::optional<std::vector<int>> hidden_widths;

  void apply(sdf::TrainConfig& c) const {
    if (epochs) c.epochs = *epochs;
    if (learning_rate) c.learning_rate = sdf::LearningRatePolicy::fixed_rate(*learning_rate);
    if (learning_rate_draws) c.learning_rate = sdf::LearningRatePolicy::search(*learning_rate_draws);
    if (reg_weight) c.reg_weight = *reg_weight;
    if (reg_samples) c.reg_samples = *reg_samples;
    if (hidden_widths) c.hidden_widths = *hidden_widths;
  }
};

struct SolverOverrides {
  std::optional<double> feasibility_tol;
  std::optional<double> optimality_tol;
  std::optional<int> max_outer;
  std::optional<int> max_inner;

  void apply(nlp::NlpOptions& o) const {
    if (feasibility_tol) o.feasibility_tol = *feasibility_tol;
    if (optimality_tol) o.optimality_tol = *optimality_tol;
    if (max_outer) o.max_outer = *max_outer;
    if (max_inner) o.max_inner = *max_inner;
  }
};

struct ExperimentConfig {
  Experiment experiment = Experiment::DiskBenchmark;
  std::vector<std::string> methods;
  std::vector<int> dimensions = {2, 4, 6, 8};
  int trials = 5;
  std::uint64_t seed = 0;
  std::string output = "results";
  int jobs = 1;
  // Disk benchmark and train-sdf.
  int n_train = 50;
  int n_test = 500;
  // train-sdf: dataset CSV; a disk dataset of dimensions[0] is used when empty.
  std::string dataset;
  // Aircraft.
  int max_iter = 200;
  int n_ini = 1;
  double tolerance = 0.05;
  double reference_speed = 13.71;
  /// End each run at the first record within tolerance. Scores are taken at
  /// that record, so this only skips work that cannot change them.
  bool stop_at_tolerance = true;
  TrainOverrides train;
  SolverOverrides solver;
  /// Training defaults used by the disk benchmark and train-sdf.
  bool learning_rate_search = true;

  sdf::TrainConfig train_config() const {
    sdf::TrainConfig c;
    if (learning_rate_search) c.learning_rate = sdf::LearningRatePolicy::search();
    train.apply(c);
    return c;
  }

  static const std::vector<std::string>& allowed_methods(Experiment e) {
    static const std::vector<std::string> disk = {"SDF", "JFit", "HingeClassifier", "Hybrid"};
    static const std::vector<std::string> air = {"DirectCO", "GP", "SDF"};
    static const std::vector<std::string> sdf_only = {"SDF"};
    switch (e) {
      case Experiment::DiskBenchmark: return disk;
      case Experiment::Aircraft: return air;
      case Experiment::TrainSdf: return sdf_only;
    }
    return sdf_only;
  }

  void validate() const {
    if (trials < 1) throw InvalidConfig("trials must be at least 1");
    if (jobs < 1) throw InvalidConfig("jobs must be at least 1");
    if (methods.empty()) throw InvalidConfig("method list is empty");
    const auto& ok = allowed_methods(experiment);
    std::set<std::string> seen;
    for (const auto& m : methods) {
      if (std::find(ok.begin(), ok.end(), m) == ok.end())
        throw InvalidConfig("method '" + m + "' is not valid for " + to_string(experiment));
      if (!seen.insert(m).second) throw InvalidConfig("method '" + m + "' listed twice");
    }
    if (dimensions.empty()) throw InvalidConfig("dimension list is empty");
    for (int d : dimensions)
      if (d < 1) throw InvalidConfig("dimensions must be positive");
    if (n_train < 1 || n_test < 0) throw InvalidConfig("invalid dataset sizes");
    if (max_iter < 1 || n_ini < 1) throw InvalidConfig("max_iter and n_ini must be positive");
    if (!(tolerance > 0.0)) throw InvalidConfig("tolerance must be positive");
    if (output.empty()) throw InvalidConfig("output directory is empty");
  }
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, const std::set<std::string>& keys, const std::string& where) {
  if (!j.is_object()) throw InvalidConfig(where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!keys.count(it.key())) throw InvalidConfig("unknown key '" + it.key() + "' in " + where);
}

template <class T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfig(std::string("bad value for '") + key + "': " + e.what());
  }
}

template <class T>
void read(const nlohmann::json& j, const char* key, std::optional<T>& out) {
  if (!j.contains(key)) return;
  T v{};
  read(j, key, v);
  out = v;
}

inline Experiment parse_experiment(const std::string& s) {
  if (s == "disk-benchmark") return Experiment::DiskBenchmark;
  if (s == "aircraft") return Experiment::Aircraft;
  if (s == "train-sdf") return Experiment::TrainSdf;
  throw InvalidConfig("unknown experiment '" + s + "'");
}

}  // namespace detail

/// Default configuration of an experiment: all methods, default sizes.
inline ExperimentConfig default_config(Experiment e) {
  ExperimentConfig c;
  c.experiment = e;
  c.methods = ExperimentConfig::allowed_methods(e);
  if (e == Experiment::Aircraft) c.trials = 20;
  if (e == Experiment::TrainSdf) {
    c.trials = 1;
    c.dimensions = {2};
  }
  return c;
}

/// Applies a JSON document on top of the defaults of `e`. Unknown keys, and an
/// "experiment" key naming a different experiment, are configuration errors.
inline ExperimentConfig parse_config(const nlohmann::json& j, Experiment e) {
  using detail::read;
  detail::reject_unknown(j,
                         {"experiment", "methods", "dimensions", "trials", "seed", "output", "jobs", "n_train",
                          "n_test", "dataset", "max_iter", "n_ini", "tolerance", "reference_speed", "train",
                          "solver", "learning_rate_search", "stop_at_tolerance"},
                         "config");
  ExperimentConfig c = default_config(e);
  if (j.contains("experiment")) {
    std::string name;
    read(j, "experiment", name);
    if (detail::parse_experiment(name) != e)
      throw InvalidConfig("config is for '" + name + "', not '" + to_string(e) + "'");
  }
  read(j, "methods", c.methods);
  read(j, "dimensions", c.dimensions);
  read(j, "trials", c.trials);
  read(j, "seed", c.seed);
  read(j, "output", c.output);
  read(j, "jobs", c.jobs);
  read(j, "n_train", c.n_train);
  read(j, "n_test", c.n_test);
  read(j, "dataset", c.dataset);
  read(j, "max_iter", c.max_iter);
  read(j, "n_ini", c.n_ini);
  read(j, "tolerance", c.tolerance);
  read(j, "reference_speed", c.reference_speed);
  read(j, "learning_rate_search", c.learning_rate_search);
  read(j, "stop_at_tolerance", c.stop_at_tolerance);
  if (j.contains("train")) {
    const auto& t = j.at("train");
    detail::reject_unknown(t,
                           {"epochs", "learning_rate", "learning_rate_draws", "reg_weight", "reg_samples",
                            "hidden_widths"},
                           "train");
    read(t, "epochs", c.train.epochs);
    read(t, "learning_rate", c.train.learning_rate);
    read(t, "learning_rate_draws", c.train.learning_rate_draws);
    read(t, "reg_weight", c.train.reg_weight);
    read(t, "reg_samples", c.train.reg_samples);
    read(t, "hidden_widths", c.train.hidden_widths);
    if (c.train.learning_rate && c.train.learning_rate_draws)
      throw InvalidConfig("train: learning_rate and learning_rate_draws are exclusive");
  }
  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    detail::reject_unknown(s, {"feasibility_tol", "optimality_tol", "max_outer", "max_inner"}, "solver");
    read(s, "feasibility_tol", c.solver.feasibility_tol);
    read(s, "optimality_tol", c.solver.optimality_tol);
    read(s, "max_outer", c.solver.max_outer);
    read(s, "max_inner", c.solver.max_inner);
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path, Experiment e) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& err) {
    throw InvalidConfig("config " + path + ": " + err.what());
  }
  return parse_config(j, e);
}

/// JSON echo of a configuration, used in manifests.
inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["experiment"] = to_string(c.experiment);
  j["methods"] = c.methods;
  j["dimensions"] = c.dimensions;
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  j["output"] = c.output;
  j["n_train"] = c.n_train;
  j["n_test"] = c.n_test;
  j["dataset"] = c.dataset;
  j["max_iter"] = c.max_iter;
  j["n_ini"] = c.n_ini;
  j["tolerance"] = c.tolerance;
  j["reference_speed"] = c.reference_speed;
  j["learning_rate_search"] = c.learning_rate_search;
  j["stop_at_tolerance"] = c.stop_at_tolerance;
  nlohmann::json t = nlohmann::json::object();
  if (c.train.epochs) t["epochs"] = *c.train.epochs;
  if (c.train.learning_rate) t["learning_rate"] = *c.train.learning_rate;
  if (c.train.learning_rate_draws) t["learning_rate_draws"] = *c.train.learning_rate_draws;
  if (c.train.reg_weight) t["reg_weight"] = *c.train.reg_weight;
  if (c.train.reg_samples) t["reg_samples"] = *c.train.reg_samples;
  if (c.train.hidden_widths) t["hidden_widths"] = *c.train.hidden_widths;
  j["train"] = t;
  nlohmann::json s = nlohmann::json::object();
  if (c.solver.feasibility_tol) s["feasibility_tol"] = *c.solver.feasibility_tol;
  if (c.solver.optimality_tol) s["optimality_tol"] = *c.solver.optimality_tol;
  if (c.solver.max_outer) s["max_outer"] = *c.solver.max_outer;
  if (c.solver.max_inner) s["max_inner"] = *c.solver.max_inner;
  j["solver"] = s;
  return j;
}

}  // namespace cosdf::experiments
