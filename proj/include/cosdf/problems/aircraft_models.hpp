#pragma once

#include <cmath>
#include <numbers>

#include <json.hpp>

#include "cosdf/core/dual.hpp"
#include "cosdf/core/types.hpp"

namespace cosdf::aircraft {

/// Constants of the electric marathon aircraft. Forces in N, masses in kg.
struct Constants {
  // Operating envelope of the motor
  double min_rpm = 5000.0;
  double max_rpm = 10000.0;
  double max_voltage = 9.0;
  // Motor
  double kv_rpm_per_volt = 950.0;
  double motor_resistance = 0.07;
  double no_load_current = 1.0;
  // Propeller
  double prop_radius = 0.1143;
  // Battery and mission
  double energy_density = 720e3;
  double range = 42000.0;
  // Wing
  double taper_ratio = 0.75;
  double form_factor = 2.04;
  double thickness_ratio = 0.12;
  double tail_area_ratio = 1.3;
  double airfoil_area_ratio = 0.44;
  double fixed_weight = 37.28;
  // Fuselage
  double fuselage_area = 0.18;
  double fuselage_form_factor = 1.22;
  double fuselage_length = 0.6;
  // Environment and aerodynamics
  double gravity = 9.81;
  double air_density = 1.225;
  double max_lift_coefficient = 1.0;
  double oswald_efficiency = 0.8;
  double kinematic_viscosity = 1.46e-5;
  // Structure
  double foam_density = 40.0;
  double min_spar_thickness = 1.14e-3;
  double max_stress = 4.413e9;
  double youngs_modulus = 2.344e11;
  double carbon_density = 1380.0;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(Constants, min_rpm, max_rpm, max_voltage, kv_rpm_per_volt, motor_resistance, no_load_current, prop_radius,
                                   energy_density, range, taper_ratio, form_factor, thickness_ratio, tail_area_ratio,
                                   airfoil_area_ratio, fixed_weight, fuselage_area, fuselage_form_factor,
                                   fuselage_length, gravity, air_density, max_lift_coefficient, oswald_efficiency,
                                   kinematic_viscosity, foam_density, min_spar_thickness, max_stress,
                                   youngs_modulus, carbon_density)

inline constexpr double kRpmToRadPerSec = 2.0 * std::numbers::pi / 60.0;

namespace detail {
template <class T>
T larger(const T& a, const T& b) {
  return b > a ? b : a;
}
inline void require(bool ok, const char* what) {
  if (!ok) throw InvalidInput(what);
}
}  // namespace detail

template <class T>
struct MotorState {
  T torque;   // N m
  T power;    // W drawn from the battery
  T current;  // A
};

/// Three-constant DC motor at shaft speed rpm and terminal voltage volts.
template <class T>
MotorState<T> motor(const T& rpm, const T& volts, const Constants& c = {}) {
  detail::require(value_of(rpm) >= c.min_rpm && value_of(rpm) <= c.max_rpm, "motor: shaft speed out of range");
  detail::require(value_of(volts) >= 0.0 && value_of(volts) <= c.max_voltage, "motor: voltage out of range");
  const T current = (volts - rpm / c.kv_rpm_per_volt) / c.motor_resistance;
  const double kq = c.kv_rpm_per_volt * kRpmToRadPerSec;
  return {(current - c.no_load_current) / kq, current * volts, current};
}

template <class T>
struct PropellerState {
  T torque;  // N m
  T thrust;  // N
};

/// Polynomial propeller fits. The advance ratio is taken on the diameter.
template <class T>
PropellerState<T> propeller(const T& rpm, const T& speed, const Constants& c = {}) {
  detail::require(value_of(rpm) > 0.0, "propeller: shaft speed must be positive");
  constexpr double pi = std::numbers::pi;
  const double r = c.prop_radius;
  const T omega = rpm * kRpmToRadPerSec;
  const T torque = c.air_density * (4.0 / (pi * pi * pi)) * r * r * r *
                   (0.0363 * omega * omega * r * r + 0.0147 * speed * omega * r * pi -
                    0.0953 * speed * speed * pi * pi);
  const T n = omega / (2.0 * pi);
  const T advance = speed / (n * (2.0 * r));
  const T ct = 0.090 - 0.0735 * advance - 0.1141 * advance * advance;
  const double d2 = 4.0 * r * r;
  return {torque, ct * c.air_density * n * n * d2 * d2};
}

/// Battery mass (kg) needed to fly the mission range at speed drawing power.
template <class T>
T battery_mass(const T& speed, const T& power, const Constants& c = {}) {
  detail::require(value_of(speed) > 0.0, "battery: speed must be positive");
  return power * (c.range / speed) / c.energy_density;
}

/// Wing structural weight (N) from foam volume and a carbon spar sized for
/// stress and tip deflection under lift.
template <class T>
T wing_weight(const T& span, const T& area, const T& lift, const Constants& c = {}) {
  detail::require(value_of(span) > 0.0 && value_of(area) > 0.0 && value_of(lift) > 0.0,
                  "wing_weight: span, area and lift must be positive");
  constexpr double pi = std::numbers::pi;
  const T foam = c.gravity * c.foam_density * (area * area / span) * c.thickness_ratio * c.airfoil_area_ratio;
  const T radius = (area / (4.0 * span)) * c.thickness_ratio;
  const T inertia = pi * radius * radius * radius * c.min_spar_thickness;
  const T stress_gauge = c.min_spar_thickness * (lift * span / 8.0) * radius / inertia / c.max_stress / 0.07;
  const T deflection = lift * span * span * span * span / (64.0 * c.youngs_modulus * inertia);
  const T deflection_gauge = c.min_spar_thickness * (2.0 * deflection / span) / 0.07;
  const T gauge = detail::larger(detail::larger(deflection_gauge, stress_gauge), T(c.min_spar_thickness));
  const T spar = 2.0 * pi * radius * gauge * span * c.carbon_density * c.gravity;
  return spar + foam;
}

template <class T>
struct DragBreakdown {
  T lift_coefficient;
  T induced;
  T wing_parasitic;
  T fuselage_parasitic;
  T stall;
  T drag;  // N
};

/// Drag (N) of the aircraft flying level at speed while producing lift.
template <class T>
DragBreakdown<T> drag(const T& span, const T& area, const T& speed, const T& lift, const Constants& c = {}) {
  detail::require(value_of(span) > 0.0 && value_of(area) > 0.0 && value_of(speed) > 0.0,
                  "drag: span, area and speed must be positive");
  constexpr double pi = std::numbers::pi;
  using std::pow;
  const T q = 0.5 * c.air_density * speed * speed;
  DragBreakdown<T> d;
  d.lift_coefficient = lift / (q * area);
  d.induced = d.lift_coefficient * d.lift_coefficient * area / (pi * span * span * c.oswald_efficiency);
  const T re_wing = speed * area / (span * c.kinematic_viscosity);
  const T cf_wing = 0.074 / pow(re_wing, 0.2);
  d.wing_parasitic = (1.0 + 2.0 * c.thickness_ratio) * cf_wing * c.form_factor * c.tail_area_ratio;
  const T re_fuse = speed * c.fuselage_length / c.kinematic_viscosity;
  const T cf_fuse = 0.074 / pow(re_fuse, 0.2);
  d.fuselage_parasitic = cf_fuse * (c.fuselage_area / area) * c.fuselage_form_factor;
  const T excess = detail::larger(T(0.0), d.lift_coefficient - c.max_lift_coefficient);
  d.stall = 0.1 * excess * excess;
  d.drag = q * area * (d.induced + d.wing_parasitic + d.fuselage_parasitic + d.stall);
  return d;
}

/// Total weight (N) that lift must carry. The battery term enters with its
/// numeric kg value, as in the reference sizing model.
template <class T>
T total_weight(const T& wing, const T& battery_kg, const Constants& c = {}) {
  return c.fixed_weight + battery_kg + wing;
}

struct AeroState {
  double lift;
  double drag;
  double wing_weight;
};

/// Level-flight lift and drag with the wing weight resolved self-consistently
/// (lift = total weight, wing weight depends on lift).
inline AeroState aero(double span, double area, double speed, double battery_kg, const Constants& c = {}) {
  detail::require(span > 0.0 && area > 0.0 && speed > 0.0, "aero: span, area and speed must be positive");
  double lift = total_weight(0.0, battery_kg, c);
  double wing = 0.0;
  for (int it = 0; it < 500; ++it) {
    wing = wing_weight(span, area, lift, c);
    const double next = total_weight(wing, battery_kg, c);
    const bool done = std::abs(next - lift) <= 1e-13 * next;
    lift = next;
    if (done) break;
  }
  if (!std::isfinite(lift)) throw NumericError("aero: lift closure diverged");
  return {lift, drag(span, area, speed, lift, c).drag, wing};
}

}  // namespace cosdf::aircraft
