#pragma once

#include <optional>

#include "cosdf/co/direct.hpp"
#include "cosdf/gp/model.hpp"
#include "cosdf/nn/tape.hpp"
#include "cosdf/sdf/train.hpp"

namespace cosdf::co {

enum class SurrogateKind { Sdf, Gp };

inline std::string to_string(SurrogateKind k) { return k == SurrogateKind::Sdf ? "SDF" : "GP"; }

struct SurrogateCoOptions {
  SurrogateKind kind = SurrogateKind::Sdf;
  int n_ini = 1;
  /// Cap on recorded iterations, initial samples included.
  int max_iter = 200;
  int candidate_restarts = 15;
  /// GP surrogates predict feasibility where the predicted J* is below this.
  double gp_threshold = 1e-4;
  /// Stop once two consecutive candidates are truly feasible and closer than
  /// this fraction of the box width in every coordinate.
  double step_tol = 1e-2;
  SubspaceOptions subspace;
  /// Box bounds and seed are filled in per training.
  sdf::TrainConfig sdf = default_sdf_config();
  gp::GpFitOptions gp;
  nlp::NlpOptions candidate_solver;
  /// Called before each fit with the iteration and per-discipline data sizes.
  std::function<void(int iteration, const std::vector<std::size_t>& sizes)> on_fit;
  /// Checked after every record; returning true ends the run as Stopped.
  std::function<bool(const RunHistory&)> stop_when;

  static sdf::TrainConfig default_sdf_config() {
    sdf::TrainConfig c;
    c.learning_rate = sdf::LearningRatePolicy::search();
    return c;
  }
};

namespace detail {

/// Feasibility predicates s_i(z) <= 0 of the current surrogates.
class SurrogateSet {
 public:
  SurrogateSet(SurrogateKind kind, double gp_threshold) : kind_(kind), gp_threshold_(gp_threshold) {}

  void set_networks(std::vector<nn::Network> nets) { nets_ = std::move(nets); }
  void set_gps(std::vector<gp::GpModel> gps) { gps_ = std::move(gps); }
  std::size_t size() const { return kind_ == SurrogateKind::Sdf ? nets_.size() : gps_.size(); }

  double value(std::size_t i, const Vec& z, Vec& grad) const {
    if (kind_ == SurrogateKind::Sdf) {
      auto [h, g] = nn::value_and_input_gradient(nets_[i], z);
      grad = g;
      return h;
    }
    return gps_[i].predict(z, &grad) - gp_threshold_;
  }

 private:
  SurrogateKind kind_;
  double gp_threshold_;
  std::vector<nn::Network> nets_;
  std::vector<gp::GpModel> gps_;
};

}  // namespace detail

/// Surrogate-assisted collaborative optimization. Each iteration fits one
/// feasibility surrogate per discipline on every evaluation so far, picks the
/// best objective value the surrogates deem feasible (or, failing that, the
/// point closest to surrogate feasibility) and evaluates all subspaces there.
inline RunHistory run_surrogate_co(const CoProblem& p, std::uint64_t seed, const SurrogateCoOptions& opts = {}) {
  p.validate();
  if (opts.max_iter < 1) throw InvalidConfig("surrogate co: max_iter must be at least 1");
  if (opts.n_ini < 1) throw InvalidConfig("surrogate co: n_ini must be at least 1");
  if (opts.candidate_restarts < 1) throw InvalidConfig("surrogate co: candidate_restarts must be at least 1");
  const std::size_t m = p.disciplines.size();
  RunHistory h;
  h.method = to_string(opts.kind);
  h.shared_names = p.names;
  for (const auto& d : p.disciplines) h.discipline_names.push_back(d->name());

  std::vector<std::vector<SubspaceResult>> data(m);
  int substitutes = 0;
  auto evaluate_all = [&](const Vec& z, bool surrogate_feasible, std::string note) {
    std::vector<SubspaceResult> rs;
    for (std::size_t i = 0; i < m; ++i) rs.push_back(evaluate_subspace(p, i, z, opts.subspace));
    for (std::size_t i = 0; i < m; ++i) data[i].push_back(rs[i]);
    h.records.push_back(make_record(p, static_cast<int>(h.records.size()) + 1, z, std::move(rs),
                                    surrogate_feasible, std::move(note)));
  };

  std::vector<gp::GpModel> gps;
  for (std::size_t i = 0; i < m; ++i) gps.push_back(gp::GpModel::for_box(p.lower, p.upper));

  auto fit = [&](int iteration) {
    if (opts.on_fit) {
      std::vector<std::size_t> sizes;
      for (const auto& d : data) sizes.push_back(d.size());
      opts.on_fit(iteration, sizes);
    }
    detail::SurrogateSet set(opts.kind, opts.gp_threshold);
    if (opts.kind == SurrogateKind::Sdf) {
      std::vector<nn::Network> nets;
      for (std::size_t i = 0; i < m; ++i) {
        sdf::Dataset ds;
        for (const auto& r : data[i]) ds.push_back(r.to_sample());
        sdf::TrainConfig cfg = opts.sdf;
        cfg.box_lower = p.lower;
        cfg.box_upper = p.upper;
        cfg.seed = derive_seed(seed, static_cast<std::uint64_t>(iteration) * 64 + i);
        nets.push_back(sdf::train_sdf(ds, cfg));
      }
      set.set_networks(std::move(nets));
    } else {
      for (std::size_t i = 0; i < m; ++i) {
        std::vector<gp::Observation> obs;
        for (const auto& r : data[i]) obs.push_back({r.z, r.j_star, 2.0 * (r.z - r.z_proj)});
        gps[i] = gp::fit_gp(gps[i], std::move(obs), opts.gp);
      }
      set.set_gps(gps);
    }
    return set;
  };

  auto candidate = [&](const detail::SurrogateSet& set, int iteration, bool& surrogate_feasible) {
    const std::uint64_t cseed = derive_seed(seed, 0xca0000 + static_cast<std::uint64_t>(iteration));
    nlp::NlpProblem cp;
    cp.dim = p.dim();
    cp.lower = p.lower;
    cp.upper = p.upper;
    cp.n_ineq = static_cast<int>(m);
    cp.objective = p.objective;
    cp.constraints = [&](const Vec& z, Vec& g, Mat& jg, Vec&, Mat&) {
      Vec grad;
      for (std::size_t i = 0; i < m; ++i) {
        g[static_cast<Eigen::Index>(i)] = set.value(i, z, grad);
        jg.row(static_cast<Eigen::Index>(i)) = grad.transpose();
      }
    };
    nlp::NlpSolution sol = nlp::multistart_solve(cp, opts.candidate_restarts, cseed, opts.candidate_solver);
    if (sol.status == nlp::NlpStatus::NumericError) throw NumericError("candidate search failed: " + sol.message);
    surrogate_feasible = sol.feasible(opts.candidate_solver.feasibility_tol);
    if (surrogate_feasible) return Vec(sol.x);

    // No surrogate-feasible point: minimize the summed positive violations.
    nlp::NlpProblem fp;
    fp.dim = p.dim();
    fp.lower = p.lower;
    fp.upper = p.upper;
    fp.objective = [&](const Vec& z, Vec& g) {
      g.setZero(z.size());
      double total = 0.0;
      Vec grad;
      for (std::size_t i = 0; i < m; ++i) {
        const double s = set.value(i, z, grad);
        if (s > 0.0) {
          total += s;
          g += grad;
        }
      }
      return total;
    };
    const nlp::NlpSolution fb = nlp::multistart_solve(fp, opts.candidate_restarts, derive_seed(cseed, 1),
                                                      opts.candidate_solver);
    if (fb.status == nlp::NlpStatus::NumericError) throw NumericError("fallback search failed: " + fb.message);
    return Vec(fb.x);
  };

  try {
    auto stop_requested = [&] { return opts.stop_when && opts.stop_when(h); };
    bool stopped = false;
    for (int k = 0; k < opts.n_ini && static_cast<int>(h.records.size()) < opts.max_iter && !stopped; ++k) {
      evaluate_all(initial_point(p, seed, k), false, "initial");
      stopped = stop_requested();
    }

    h.status = stopped ? RunStatus::Stopped : RunStatus::MaxIter;
    while (!stopped && static_cast<int>(h.records.size()) < opts.max_iter) {
      const int iteration = static_cast<int>(h.records.size()) + 1;
      Vec z;
      bool surrogate_feasible = false;
      std::string note;
      try {
        const detail::SurrogateSet set = fit(iteration);
        z = candidate(set, iteration, surrogate_feasible);
        note = surrogate_feasible ? "" : "fallback";
      } catch (const NumericError& e) {
        // Keep the loop alive with a fresh uniform sample.
        z = initial_point(p, derive_seed(seed, 0x5b5700), opts.n_ini + substitutes++);
        surrogate_feasible = false;
        note = "substituted";
      }
      evaluate_all(z, surrogate_feasible, note);
      if (stop_requested()) {
        h.status = RunStatus::Stopped;
        break;
      }

      const auto& recs = h.records;
      if (recs.size() >= 2 && recs.back().truly_feasible && recs[recs.size() - 2].truly_feasible) {
        const Vec step = (recs.back().z - recs[recs.size() - 2].z).cwiseAbs().cwiseQuotient(p.upper - p.lower);
        if (step.maxCoeff() <= opts.step_tol) {
          h.status = RunStatus::Converged;
          break;
        }
      }
    }
  } catch (const NumericError& e) {
    h.status = RunStatus::NumericError;
    h.message = e.what();
  }
  return h;
}

}  // namespace cosdf::co
