#pragma once

#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "cosdf/experiments/config.hpp"
#include "cosdf/experiments/runner.hpp"
#include "cosdf/problems/hypersphere.hpp"
#include "cosdf/sdf/train.hpp"

namespace cosdf::experiments {

struct DiskRow {
  int dimension = 0;
  int trial = 0;
  std::string method;
  double accuracy = std::nan("");
  bool ok = true;
  std::string message;
};

struct DiskSummaryRow {
  std::string method;
  int dimension = 0;
  MeanStd accuracy;
  std::size_t failures = 0;
};

struct DiskTable {
  std::vector<DiskRow> rows;
  std::vector<DiskSummaryRow> summary;

  bool any_error() const {
    for (const auto& r : rows)
      if (!r.ok) return true;
    return false;
  }

  const DiskSummaryRow* find(const std::string& method, int dimension) const {
    for (const auto& s : summary)
      if (s.method == method && s.dimension == dimension) return &s;
    return nullptr;
  }
};

inline sdf::ModelKind parse_model_kind(const std::string& m) {
  if (m == "SDF") return sdf::ModelKind::Sdf;
  if (m == "JFit") return sdf::ModelKind::JFit;
  if (m == "HingeClassifier") return sdf::ModelKind::HingeClassifier;
  if (m == "Hybrid") return sdf::ModelKind::Hybrid;
  throw InvalidConfig("unknown model '" + m + "'");
}

/// Seed of the dataset for (dimension, trial); methods share it.
inline std::uint64_t disk_trial_seed(std::uint64_t seed, int dimension, int trial) {
  return derive_seed(derive_seed(seed, static_cast<std::uint64_t>(dimension)), static_cast<std::uint64_t>(trial));
}

/// Trains every method on shared datasets for each dimension and trial and
/// reports test accuracy. Trial failures are recorded, not thrown.
inline DiskTable run_disk_benchmark(const ExperimentConfig& cfg) {
  cfg.validate();
  struct Task {
    int dimension, trial;
    std::string method;
  };
  std::vector<Task> tasks;
  for (int d : cfg.dimensions)
    for (int t = 0; t < cfg.trials; ++t)
      for (const auto& m : cfg.methods) tasks.push_back({d, t, m});

  DiskTable table;
  table.rows.resize(tasks.size());
  run_tasks(tasks.size(), cfg.jobs, [&](std::size_t i) {
    const auto& task = tasks[i];
    DiskRow row{task.dimension, task.trial, task.method};
    try {
      const auto seed = disk_trial_seed(cfg.seed, task.dimension, task.trial);
      const auto data = problems::make_disk_dataset(task.dimension, cfg.n_train, cfg.n_test, seed);
      const auto kind = parse_model_kind(task.method);
      sdf::TrainConfig tc = cfg.train_config();
      tc.seed = derive_seed(seed, static_cast<std::uint64_t>(kind) + 1);
      tc.box_lower = Vec::Constant(task.dimension, -problems::kHypersphereHalfWidth);
      tc.box_upper = Vec::Constant(task.dimension, problems::kHypersphereHalfWidth);
      const auto net = sdf::train_model(data.train, kind, tc);
      row.accuracy = sdf::accuracy(net, data.test, kind);
    } catch (const std::exception& e) {
      row.ok = false;
      row.message = e.what();
    }
    table.rows[i] = std::move(row);
  });

  for (const auto& m : cfg.methods)
    for (int d : cfg.dimensions) {
      DiskSummaryRow s{m, d};
      std::vector<double> acc;
      for (const auto& r : table.rows)
        if (r.method == m && r.dimension == d) {
          if (r.ok) acc.push_back(r.accuracy);
          else ++s.failures;
        }
      s.accuracy = mean_std(acc);
      table.summary.push_back(s);
    }
  return table;
}

inline std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

inline void write_disk_rows_csv(std::ostream& out, const DiskTable& t) {
  out << "dimension,trial,method,accuracy,status,message\n";
  for (const auto& r : t.rows)
    out << r.dimension << ',' << r.trial << ',' << r.method << ',' << fmt(r.accuracy) << ','
        << (r.ok ? "ok" : "error") << ',' << csv_cell(r.message) << '\n';
}

inline void write_disk_summary_csv(std::ostream& out, const DiskTable& t) {
  out << "method,dimension,mean_accuracy,std_accuracy,trials,failures\n";
  for (const auto& s : t.summary)
    out << s.method << ',' << s.dimension << ',' << fmt(s.accuracy.mean) << ',' << fmt(s.accuracy.std) << ','
        << s.accuracy.n << ',' << s.failures << '\n';
}

/// Writes disk_results.csv, disk_summary.csv and manifest.json into cfg.output.
inline std::vector<std::string> save_disk_benchmark(const ExperimentConfig& cfg, const DiskTable& t) {
  ensure_directory(cfg.output);
  const std::vector<std::string> files = {"disk_results.csv", "disk_summary.csv"};
  const auto dir = std::filesystem::path(cfg.output);
  {
    const auto p = (dir / files[0]).string();
    auto out = open_output(p);
    write_disk_rows_csv(out, t);
    close_output(out, p);
  }
  {
    const auto p = (dir / files[1]).string();
    auto out = open_output(p);
    write_disk_summary_csv(out, t);
    close_output(out, p);
  }
  write_manifest(cfg.output, cfg, files);
  return files;
}

}  // namespace cosdf::experiments
