#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "cosdf/core/types.hpp"

namespace cosdf::co {

/// Constraint values and Jacobians of one discipline. Jacobian columns are
/// ordered [shared copies, local variables].
struct ConstraintValues {
  Vec ineq;
  Mat ineq_jac;
  Vec eq;
  Mat eq_jac;

  void resize(int n_ineq, int n_eq, int n_vars) {
    ineq.setZero(n_ineq);
    ineq_jac.setZero(n_ineq, n_vars);
    eq.setZero(n_eq);
    eq_jac.setZero(n_eq, n_vars);
  }
};

/// A discipline owns local variables and constraints c(x_local, z_copy) <= 0
/// and = 0. Every constraint-set evaluation is counted.
class Discipline {
 public:
  Discipline(std::string name, int shared_dim, Vec local_lower, Vec local_upper, int n_ineq, int n_eq)
      : name_(std::move(name)),
        shared_dim_(shared_dim),
        local_lower_(std::move(local_lower)),
        local_upper_(std::move(local_upper)),
        n_ineq_(n_ineq),
        n_eq_(n_eq) {
    if (shared_dim_ <= 0) throw InvalidConfig("discipline " + name_ + ": shared dimension must be positive");
    if (local_lower_.size() != local_upper_.size() || (local_lower_.array() > local_upper_.array()).any())
      throw InvalidConfig("discipline " + name_ + ": bad local bounds");
    if (n_ineq_ < 0 || n_eq_ < 0 || n_ineq_ + n_eq_ == 0)
      throw InvalidConfig("discipline " + name_ + ": needs at least one constraint");
  }
  virtual ~Discipline() = default;
  Discipline(const Discipline&) = delete;
  Discipline& operator=(const Discipline&) = delete;

  const std::string& name() const { return name_; }
  int shared_dim() const { return shared_dim_; }
  int local_dim() const { return static_cast<int>(local_lower_.size()); }
  int n_ineq() const { return n_ineq_; }
  int n_eq() const { return n_eq_; }
  const Vec& local_lower() const { return local_lower_; }
  const Vec& local_upper() const { return local_upper_; }

  void evaluate(const Vec& shared, const Vec& local, ConstraintValues& out) const {
    if (shared.size() != shared_dim_ || local.size() != local_dim())
      throw InvalidInput("discipline " + name_ + ": variable size mismatch");
    out.resize(n_ineq_, n_eq_, shared_dim_ + local_dim());
    evaluations_.fetch_add(1, std::memory_order_relaxed);
    do_evaluate(shared, local, out);
  }

  long evaluation_count() const { return evaluations_.load(std::memory_order_relaxed); }
  void reset_count() { evaluations_.store(0, std::memory_order_relaxed); }

 protected:
  virtual void do_evaluate(const Vec& shared, const Vec& local, ConstraintValues& out) const = 0;

 private:
  std::string name_;
  int shared_dim_;
  Vec local_lower_, local_upper_;
  int n_ineq_, n_eq_;
  mutable std::atomic<long> evaluations_{0};
};

/// Discipline defined by a callback, for fixtures and small problems.
class FunctionDiscipline final : public Discipline {
 public:
  using Fn = std::function<void(const Vec& shared, const Vec& local, ConstraintValues& out)>;
  FunctionDiscipline(std::string name, int shared_dim, Vec local_lower, Vec local_upper, int n_ineq, int n_eq,
                     Fn fn)
      : Discipline(std::move(name), shared_dim, std::move(local_lower), std::move(local_upper), n_ineq, n_eq),
        fn_(std::move(fn)) {}

 protected:
  void do_evaluate(const Vec& shared, const Vec& local, ConstraintValues& out) const override {
    fn_(shared, local, out);
  }

 private:
  Fn fn_;
};

/// System problem over the shared variables.
struct CoProblem {
  std::vector<std::string> names;
  std::vector<std::string> units;
  Vec lower;
  Vec upper;
  /// f(z) and its gradient.
  std::function<double(const Vec& z, Vec& grad)> objective;
  std::vector<std::shared_ptr<Discipline>> disciplines;

  int dim() const { return static_cast<int>(lower.size()); }

  void validate() const {
    const auto d = static_cast<std::size_t>(dim());
    if (d == 0 || upper.size() != lower.size() || (lower.array() >= upper.array()).any() ||
        !lower.allFinite() || !upper.allFinite())
      throw InvalidConfig("co problem: shared bounds must be a nonempty finite box");
    if (names.size() != d || units.size() != d) throw InvalidConfig("co problem: names/units do not match bounds");
    if (!objective) throw InvalidConfig("co problem: missing objective");
    if (disciplines.empty()) throw InvalidConfig("co problem: no disciplines");
    for (const auto& disc : disciplines)
      if (!disc || disc->shared_dim() != dim()) throw InvalidConfig("co problem: discipline shared layout mismatch");
  }

  void reset_counts() const {
    for (const auto& d : disciplines) d->reset_count();
  }
};

}  // namespace cosdf::co
