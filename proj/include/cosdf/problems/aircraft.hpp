#pragma once

#include <memory>

#include "cosdf/co/discipline.hpp"
#include "cosdf/problems/aircraft_models.hpp"

namespace cosdf::aircraft {

/// Shared-variable layout: drag D (N), speed V (m/s), battery mass W_bat (kg).
enum SharedIndex { kDrag = 0, kSpeed = 1, kBattery = 2 };

struct SharedBounds {
  Vec lower = Vec{{1.0, 5.0, 0.1}};
  Vec upper = Vec{{6.0, 15.0, 1.0}};
};

namespace detail {
template <int N>
using D = Dual<N>;

template <int N>
void write_row(const Dual<N>& v, Vec& values, Mat& jac, int row) {
  values[row] = v.v;
  for (int i = 0; i < N; ++i) jac(row, i) = v.d[static_cast<std::size_t>(i)];
}
}  // namespace detail

/// Wing sizing. Locals: span b (m), area S (m^2), lift L (N).
///   eq:   D_copy - Drag(b, S, V_copy, L) = 0
///   ineq: Weight(b, S, L) + W_fixed + W_bat_copy - L <= 0
class AeroDiscipline final : public co::Discipline {
 public:
  explicit AeroDiscipline(Constants c = {})
      : co::Discipline("aerodynamics", 3, Vec{{0.5, 0.05, 1.0}}, Vec{{6.0, 2.0, 200.0}}, 1, 1), c_(c) {}

 protected:
  void do_evaluate(const Vec& shared, const Vec& local, co::ConstraintValues& out) const override {
    using T = detail::D<6>;
    const T d = T::variable(shared[kDrag], 0), v = T::variable(shared[kSpeed], 1),
            wb = T::variable(shared[kBattery], 2);
    const T b = T::variable(local[0], 3), s = T::variable(local[1], 4), lift = T::variable(local[2], 5);
    const T drag_gap = d - drag(b, s, v, lift, c_).drag;
    const T lift_gap = total_weight(wing_weight(b, s, lift, c_), wb, c_) - lift;
    detail::write_row(drag_gap, out.eq, out.eq_jac, 0);
    detail::write_row(lift_gap, out.ineq, out.ineq_jac, 0);
  }

 private:
  Constants c_;
};

/// Motor, propeller and battery. Locals: shaft speed (RPM), voltage U (V).
///   eq:   Q_prop - Q_motor = 0,  W_bat_copy - Battery(V_copy, P_in) = 0
///   ineq: D_copy - T <= 0
class PropulsionDiscipline final : public co::Discipline {
 public:
  static constexpr double kTorqueUnit = 0.1;

  explicit PropulsionDiscipline(Constants c = {})
      : co::Discipline("propulsion", 3, Vec{{c.min_rpm, 0.0}}, Vec{{c.max_rpm, c.max_voltage}}, 1, 2), c_(c) {}

 protected:
  void do_evaluate(const Vec& shared, const Vec& local, co::ConstraintValues& out) const override {
    using T = detail::D<5>;
    const T d = T::variable(shared[kDrag], 0), v = T::variable(shared[kSpeed], 1),
            wb = T::variable(shared[kBattery], 2);
    const T rpm = T::variable(local[0], 3), volts = T::variable(local[1], 4);
    const MotorState<T> m = motor(rpm, volts, c_);
    const PropellerState<T> p = propeller(rpm, v, c_);
    // Torque residual in units of 0.1 N m, comparable in scale to the others.
    detail::write_row(T((p.torque - m.torque) / kTorqueUnit), out.eq, out.eq_jac, 0);
    detail::write_row(T(wb - battery_mass(v, m.power, c_)), out.eq, out.eq_jac, 1);
    detail::write_row(T(d - p.thrust), out.ineq, out.ineq_jac, 0);
  }

 private:
  Constants c_;
};

/// Maximize cruise speed: f(z) = -V over the shared box.
inline co::CoProblem build_aircraft_problem(const Constants& c = {}) {
  co::CoProblem p;
  p.names = {"D", "V", "W_bat"};
  p.units = {"N", "m/s", "kg"};
  const SharedBounds b;
  p.lower = b.lower;
  p.upper = b.upper;
  p.objective = [](const Vec& z, Vec& g) {
    g.setZero(z.size());
    g[kSpeed] = -1.0;
    return -z[kSpeed];
  };
  p.disciplines.push_back(std::make_shared<AeroDiscipline>(c));
  p.disciplines.push_back(std::make_shared<PropulsionDiscipline>(c));
  return p;
}

/// Reported optimum of the marathon aircraft.
struct ReferenceOptimum {
  double drag = 2.15;
  double speed = 13.71;
  double span = 2.7574;
  double area = 0.397;
  double rpm = 8127.0;
  double voltage = 9.0;
};

}  // namespace cosdf::aircraft
