#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cosdf/co/subspace.hpp"

namespace cosdf::co {

/// j_star at or below this counts as truly feasible when scoring runs.
inline constexpr double kTrueFeasibility = 1e-3;

/// Stopped: a caller-supplied stop condition ended the run early.
enum class RunStatus { Converged, MaxIter, NumericError, Stopped };

inline std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Converged: return "Converged";
    case RunStatus::MaxIter: return "MaxIter";
    case RunStatus::NumericError: return "NumericError";
    case RunStatus::Stopped: return "Stopped";
  }
  return "?";
}

struct IterationRecord {
  /// 1-based; record 1 is the first evaluated point.
  int iteration = 0;
  DesignPoint z;
  double f = 0.0;
  std::vector<SubspaceResult> subspaces;
  /// Evaluation counter of each discipline after this record.
  std::vector<long> cumulative_evaluations;
  bool surrogate_feasible = false;
  bool truly_feasible = false;
  std::string note;
};

struct RunHistory {
  std::string method;
  std::vector<std::string> shared_names;
  std::vector<std::string> discipline_names;
  std::vector<IterationRecord> records;
  RunStatus status = RunStatus::MaxIter;
  std::string message;

  std::vector<long> final_evaluations() const {
    if (records.empty()) return std::vector<long>(discipline_names.size(), 0);
    return records.back().cumulative_evaluations;
  }
};

/// Builds a record from subspace results and the current discipline counters.
inline IterationRecord make_record(const CoProblem& p, int iteration, const DesignPoint& z,
                                   std::vector<SubspaceResult> subspaces, bool surrogate_feasible,
                                   std::string note = {}) {
  IterationRecord r;
  r.iteration = iteration;
  r.z = z;
  Vec g;
  r.f = p.objective(z, g);
  r.truly_feasible = true;
  for (const auto& s : subspaces) r.truly_feasible = r.truly_feasible && s.j_star <= kTrueFeasibility;
  r.subspaces = std::move(subspaces);
  for (const auto& d : p.disciplines) r.cumulative_evaluations.push_back(d->evaluation_count());
  r.surrogate_feasible = surrogate_feasible;
  r.note = std::move(note);
  return r;
}

/// First record that is truly feasible and within rel_tol of f_star.
inline std::optional<int> iterations_to_tolerance(const RunHistory& h, double f_star, double rel_tol = 0.05) {
  if (f_star == 0.0) throw InvalidInput("iterations_to_tolerance: f_star must be nonzero");
  for (const auto& r : h.records) {
    bool feasible = !r.subspaces.empty();
    for (const auto& s : r.subspaces) feasible = feasible && s.j_star <= kTrueFeasibility;
    if (feasible && std::abs(r.f - f_star) <= rel_tol * std::abs(f_star)) return r.iteration;
  }
  return std::nullopt;
}

namespace detail {
inline std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}
}  // namespace detail

/// One row per record: iteration, shared variables, f, per-discipline j_star
/// and cumulative evaluations, feasibility flags, note.
inline void write_history_csv(std::ostream& out, const RunHistory& h) {
  out << "iteration";
  for (const auto& n : h.shared_names) out << ',' << n;
  out << ",f";
  for (const auto& d : h.discipline_names) out << ",j_" << d;
  for (const auto& d : h.discipline_names) out << ",evals_" << d;
  out << ",surrogate_feasible,truly_feasible,note\n";
  for (const auto& r : h.records) {
    out << r.iteration;
    for (Eigen::Index i = 0; i < r.z.size(); ++i) out << ',' << detail::num(r.z[i]);
    out << ',' << detail::num(r.f);
    for (const auto& s : r.subspaces) out << ',' << detail::num(s.j_star);
    for (long e : r.cumulative_evaluations) out << ',' << e;
    out << ',' << (r.surrogate_feasible ? 1 : 0) << ',' << (r.truly_feasible ? 1 : 0) << ',' << r.note << '\n';
  }
}

inline nlohmann::json history_summary(const RunHistory& h, std::optional<double> f_star = {}) {
  nlohmann::json j;
  j["method"] = h.method;
  j["status"] = to_string(h.status);
  j["message"] = h.message;
  j["iterations"] = h.records.size();
  if (f_star) {
    const auto it = iterations_to_tolerance(h, *f_star);
    j["iterations_to_tolerance"] = it ? nlohmann::json(*it) : nlohmann::json(nullptr);
  }
  nlohmann::json evals = nlohmann::json::object();
  const auto counts = h.final_evaluations();
  for (std::size_t i = 0; i < h.discipline_names.size(); ++i) evals[h.discipline_names[i]] = counts[i];
  j["evaluations"] = evals;
  if (!h.records.empty()) {
    const auto& last = h.records.back();
    j["final_f"] = last.f;
    j["final_z"] = std::vector<double>(last.z.data(), last.z.data() + last.z.size());
    j["final_truly_feasible"] = last.truly_feasible;
  }
  return j;
}

inline void save_history(const std::string& csv_path, const RunHistory& h) {
  std::ofstream out(csv_path);
  if (!out) throw IoError("cannot write " + csv_path);
  write_history_csv(out, h);
}

}  // namespace cosdf::co
