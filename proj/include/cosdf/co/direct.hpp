#pragma once

#include <functional>
#include <map>

#include "cosdf/co/history.hpp"

namespace cosdf::co {

/// Seed tag for the initial design point, shared by every method so trials
/// with the same seed start from the same place.
inline constexpr std::uint64_t kInitialPointTag = 0x1417;

inline DesignPoint initial_point(const CoProblem& p, std::uint64_t seed, int index = 0) {
  Rng rng(derive_seed(derive_seed(seed, kInitialPointTag), static_cast<std::uint64_t>(index)));
  return rng.uniform_in_box(p.lower, p.upper);
}

struct DirectCoOptions {
  /// CO constraint J*_i(z) <= relaxation.
  double relaxation = 1e-4;
  /// Cap on recorded system-level iterates.
  int max_iter = 200;
  SubspaceOptions subspace;
  nlp::NlpOptions solver;
  /// Checked after every record; returning true ends the run as Stopped.
  std::function<bool(const RunHistory&)> stop_when;
};

namespace detail {
struct StopRun {
  bool requested = false;
};
}  // namespace detail

/// Collaborative optimization solved directly: min f(z) subject to
/// J*_i(z) <= relaxation, with dJ*_i/dz = 2 (z - z_proj).
inline RunHistory run_direct_co(const CoProblem& p, std::uint64_t seed, const DirectCoOptions& opts = {}) {
  p.validate();
  if (opts.max_iter < 1) throw InvalidConfig("direct co: max_iter must be at least 1");
  RunHistory h;
  h.method = "DirectCO";
  h.shared_names = p.names;
  for (const auto& d : p.disciplines) h.discipline_names.push_back(d->name());

  std::map<std::vector<double>, std::vector<SubspaceResult>> cache;
  auto subspaces_at = [&](const Vec& z) -> const std::vector<SubspaceResult>& {
    std::vector<double> key(z.data(), z.data() + z.size());
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    std::vector<SubspaceResult> rs;
    for (std::size_t i = 0; i < p.disciplines.size(); ++i) rs.push_back(evaluate_subspace(p, i, z, opts.subspace));
    return cache.emplace(std::move(key), std::move(rs)).first->second;
  };

  const int m = static_cast<int>(p.disciplines.size());
  nlp::NlpProblem sys;
  sys.dim = p.dim();
  sys.lower = p.lower;
  sys.upper = p.upper;
  sys.n_ineq = m;
  sys.objective = p.objective;
  sys.constraints = [&](const Vec& z, Vec& g, Mat& jg, Vec&, Mat&) {
    const auto& rs = subspaces_at(z);
    for (int i = 0; i < m; ++i) {
      const auto& r = rs[static_cast<std::size_t>(i)];
      g[i] = r.j_star - opts.relaxation;
      jg.row(i) = 2.0 * (z - r.z_proj).transpose();
    }
  };

  auto record = [&](const Vec& z, std::string note) {
    const auto& rs = subspaces_at(z);
    bool ok = true;
    for (const auto& r : rs) ok = ok && r.j_star <= opts.relaxation;
    h.records.push_back(
        make_record(p, static_cast<int>(h.records.size()) + 1, z, rs, ok, std::move(note)));
  };

  nlp::NlpOptions solver = opts.solver;
  solver.on_iterate = [&](const Vec& z) {
    record(z, "");
    if (opts.stop_when && opts.stop_when(h)) throw detail::StopRun{true};
    if (static_cast<int>(h.records.size()) >= opts.max_iter) throw detail::StopRun{};
  };

  const Vec z0 = initial_point(p, seed);
  try {
    record(z0, "initial");
    if (opts.stop_when && opts.stop_when(h)) {
      h.status = RunStatus::Stopped;
      return h;
    }
    if (opts.max_iter == 1) {
      h.status = RunStatus::MaxIter;
      return h;
    }
    const nlp::NlpSolution sol = nlp::solve(sys, z0, solver);
    switch (sol.status) {
      case nlp::NlpStatus::Converged: h.status = RunStatus::Converged; break;
      case nlp::NlpStatus::NumericError: h.status = RunStatus::NumericError; break;
      default: h.status = RunStatus::MaxIter; break;
    }
    h.message = sol.message;
  } catch (const detail::StopRun& stop) {
    h.status = stop.requested ? RunStatus::Stopped : RunStatus::MaxIter;
    h.message = stop.requested ? "stop condition met" : "iteration cap reached";
  } catch (const NumericError& e) {
    h.status = RunStatus::NumericError;
    h.message = e.what();
  }
  return h;
}

}  // namespace cosdf::co
