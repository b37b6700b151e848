#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cosdf/co/direct.hpp"
#include "cosdf/co/surrogate_loop.hpp"
#include "cosdf/experiments/config.hpp"
#include "cosdf/experiments/disk.hpp"
#include "cosdf/experiments/runner.hpp"
#include "cosdf/problems/aircraft.hpp"

namespace cosdf::experiments {

struct AircraftRow {
  std::string method;
  int trial = 0;
  std::uint64_t seed = 0;
  std::string status;
  /// Empty when the run never came within tolerance of the reference speed.
  std::optional<int> iterations;
  /// Per-discipline evaluation counts at the record that reached tolerance.
  std::vector<long> evaluations_at_tolerance;
  std::vector<long> total_evaluations;
  double final_speed = std::nan("");
  int records = 0;
  bool ok = true;
  std::string message;

  bool success() const { return ok && iterations.has_value(); }
};

struct AircraftSummaryRow {
  std::string method;
  int trials = 0;
  int failures = 0;
  MeanStd iterations;
  double median_iterations = std::nan("");
  std::vector<MeanStd> evaluations;
  std::vector<double> median_evaluations;
};

struct AircraftTable {
  std::vector<std::string> discipline_names;
  std::vector<AircraftRow> rows;
  std::vector<AircraftSummaryRow> summary;
  std::vector<co::RunHistory> histories;

  bool any_error() const {
    for (const auto& r : rows)
      if (!r.ok) return true;
    return false;
  }

  const AircraftSummaryRow* find(const std::string& method) const {
    for (const auto& s : summary)
      if (s.method == method) return &s;
    return nullptr;
  }
};

/// Seed of trial i, shared by every method.
inline std::uint64_t aircraft_trial_seed(std::uint64_t seed, int trial) {
  return derive_seed(seed, static_cast<std::uint64_t>(trial));
}

inline co::RunHistory run_aircraft_method(const std::string& method, const ExperimentConfig& cfg, std::uint64_t seed) {
  // Each run owns its problem so evaluation counters are per run.
  const auto problem = aircraft::build_aircraft_problem();
  std::function<bool(const co::RunHistory&)> stop;
  if (cfg.stop_at_tolerance) {
    const double f_star = -cfg.reference_speed, tol = cfg.tolerance;
    stop = [f_star, tol](const co::RunHistory& h) { return co::iterations_to_tolerance(h, f_star, tol).has_value(); };
  }
  if (method == "DirectCO") {
    co::DirectCoOptions o;
    o.max_iter = cfg.max_iter;
    o.stop_when = stop;
    cfg.solver.apply(o.solver);
    return co::run_direct_co(problem, seed, o);
  }
  co::SurrogateCoOptions o;
  o.kind = method == "GP" ? co::SurrogateKind::Gp : co::SurrogateKind::Sdf;
  o.max_iter = cfg.max_iter;
  o.n_ini = cfg.n_ini;
  o.stop_when = stop;
  cfg.train.apply(o.sdf);
  cfg.solver.apply(o.candidate_solver);
  return co::run_surrogate_co(problem, seed, o);
}

/// Runs every method on `trials` shared seeds and scores iterations and
/// evaluations until the speed is within tolerance of the reference.
inline AircraftTable run_aircraft(const ExperimentConfig& cfg, std::ostream* progress = nullptr) {
  cfg.validate();
  struct Task {
    std::string method;
    int trial;
  };
  std::vector<Task> tasks;
  for (const auto& m : cfg.methods)
    for (int t = 0; t < cfg.trials; ++t) tasks.push_back({m, t});

  AircraftTable table;
  {
    const auto p = aircraft::build_aircraft_problem();
    for (const auto& d : p.disciplines) table.discipline_names.push_back(d->name());
  }
  const std::size_t n_disc = table.discipline_names.size();
  table.rows.resize(tasks.size());
  table.histories.resize(tasks.size());
  const double f_star = -cfg.reference_speed;
  run_tasks(tasks.size(), cfg.jobs, [&](std::size_t i) {
    AircraftRow row;
    row.method = tasks[i].method;
    row.trial = tasks[i].trial;
    row.seed = aircraft_trial_seed(cfg.seed, row.trial);
    try {
      auto h = run_aircraft_method(row.method, cfg, row.seed);
      row.status = co::to_string(h.status);
      row.message = h.message;
      row.records = static_cast<int>(h.records.size());
      row.total_evaluations = h.final_evaluations();
      if (!h.records.empty()) row.final_speed = h.records.back().z[aircraft::SharedIndex::kSpeed];
      row.iterations = co::iterations_to_tolerance(h, f_star, cfg.tolerance);
      if (row.iterations)
        row.evaluations_at_tolerance = h.records[static_cast<std::size_t>(*row.iterations - 1)].cumulative_evaluations;
      if (h.status == co::RunStatus::NumericError) row.ok = false;
      table.histories[i] = std::move(h);
    } catch (const std::exception& e) {
      row.ok = false;
      row.status = "Error";
      row.message = e.what();
    }
    if (progress) *progress << row.method << " trial " << row.trial << ": " << row.status << ", iterations "
                             << (row.iterations ? std::to_string(*row.iterations) : "-") << std::endl;
    table.rows[i] = std::move(row);
  });

  for (const auto& m : cfg.methods) {
    AircraftSummaryRow s;
    s.method = m;
    std::vector<double> its;
    std::vector<std::vector<double>> evals(n_disc);
    for (const auto& r : table.rows) {
      if (r.method != m) continue;
      ++s.trials;
      if (!r.success()) {
        ++s.failures;
        continue;
      }
      its.push_back(*r.iterations);
      for (std::size_t k = 0; k < n_disc; ++k) evals[k].push_back(static_cast<double>(r.evaluations_at_tolerance[k]));
    }
    s.iterations = mean_std(its);
    s.median_iterations = median(its);
    for (std::size_t k = 0; k < n_disc; ++k) {
      s.evaluations.push_back(mean_std(evals[k]));
      s.median_evaluations.push_back(median(evals[k]));
    }
    table.summary.push_back(std::move(s));
  }
  return table;
}

inline void write_aircraft_rows_csv(std::ostream& out, const AircraftTable& t) {
  out << "method,trial,seed,status,iterations_to_tolerance";
  for (const auto& d : t.discipline_names) out << ",evals_" << d;
  for (const auto& d : t.discipline_names) out << ",total_evals_" << d;
  out << ",records,final_speed,message\n";
  for (const auto& r : t.rows) {
    out << r.method << ',' << r.trial << ',' << r.seed << ',' << r.status << ','
        << (r.iterations ? std::to_string(*r.iterations) : "");
    for (std::size_t k = 0; k < t.discipline_names.size(); ++k)
      out << ',' << (k < r.evaluations_at_tolerance.size() ? std::to_string(r.evaluations_at_tolerance[k]) : "");
    for (std::size_t k = 0; k < t.discipline_names.size(); ++k)
      out << ',' << (k < r.total_evaluations.size() ? std::to_string(r.total_evaluations[k]) : "");
    out << ',' << r.records << ',' << fmt(r.final_speed) << ',' << csv_cell(r.message) << '\n';
  }
}

/// One line per method shaped like the published comparison: mean, standard
/// deviation and median of iterations and per-discipline evaluations.
inline void write_aircraft_summary_csv(std::ostream& out, const AircraftTable& t) {
  out << "method,trials,failures,mean_iterations,std_iterations,median_iterations";
  for (const auto& d : t.discipline_names) out << ",mean_evals_" << d << ",std_evals_" << d << ",median_evals_" << d;
  out << '\n';
  for (const auto& s : t.summary) {
    out << s.method << ',' << s.trials << ',' << s.failures << ',' << fmt(s.iterations.mean) << ','
        << fmt(s.iterations.std) << ',' << fmt(s.median_iterations);
    for (std::size_t k = 0; k < s.evaluations.size(); ++k)
      out << ',' << fmt(s.evaluations[k].mean) << ',' << fmt(s.evaluations[k].std) << ','
          << fmt(s.median_evaluations[k]);
    out << '\n';
  }
}

/// Writes aircraft_results.csv, aircraft_summary.csv, one history CSV per run
/// under histories/, and manifest.json.
inline std::vector<std::string> save_aircraft(const ExperimentConfig& cfg, const AircraftTable& t) {
  ensure_directory(cfg.output);
  const auto dir = std::filesystem::path(cfg.output);
  std::vector<std::string> files = {"aircraft_results.csv", "aircraft_summary.csv"};
  {
    const auto p = (dir / files[0]).string();
    auto out = open_output(p);
    write_aircraft_rows_csv(out, t);
    close_output(out, p);
  }
  {
    const auto p = (dir / files[1]).string();
    auto out = open_output(p);
    write_aircraft_summary_csv(out, t);
    close_output(out, p);
  }
  ensure_directory((dir / "histories").string());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (t.histories[i].records.empty()) continue;
    const std::string name = "histories/" + t.rows[i].method + "_" + std::to_string(t.rows[i].trial) + ".csv";
    const auto p = (dir / name).string();
    auto out = open_output(p);
    co::write_history_csv(out, t.histories[i]);
    close_output(out, p);
    files.push_back(name);
  }
  write_manifest(cfg.output, cfg, files);
  return files;
}

}  // namespace cosdf::experiments
