#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "tmpc/dynamics.hpp"

namespace tmpc {

// Energy stability margin: minimum potential energy change to rotate the
// chassis about a support-polygon edge to the rollover balance point.
// Negative once the CoM passes outside the footprint (|phi| + phi_bar > pi/2),
// and it keeps growing negative as rollover continues.
inline double esm(double phi, double theta, const VehicleParams& vp) {
  const double r_bar = std::hypot(vp.h + vp.R, vp.e / 2.0);
  const double phi_bar = std::atan(2.0 * (vp.h + vp.R) / vp.e);
  const double lever = std::abs(phi) + phi_bar;
  const double dh = r_bar * (1.0 - std::sin(lever)) * std::cos(theta);
  const double sign = lever <= M_PI / 2.0 ? 1.0 : -1.0;
  return sign * vp.M * vp.g * dh;
}

// Flat-ground ESM; the normalization base for the 10% safety-factor onset.
inline double esm_normalization(const VehicleParams& vp) {
  return esm(0.0, 0.0, vp);
}

struct SoftConstraintParams {
  double epsilon;  // normalizing width, units of the violation measure
  double sigma;    // cost/s at exact violation
};

// Normalized quadratic soft-constraint rate: zero until the margin shrinks to
// epsilon, sigma at exact violation, quadratic growth beyond.
inline double soft_cost_rate(double pi, const SoftConstraintParams& scp) {
  const double a = std::max(0.0, 1.0 + pi / scp.epsilon);
  return scp.sigma * a * a;
}

struct ConstraintConfig {
  double a_by_bar = 5.0;      // m/s^2, empirical critical lateral acceleration
  double esm_nominal = 0.0;   // J, set from esm_normalization at setup
  double eps_dist = 0.25;     // m
  double sigma = 1e6;         // cost/s at exact violation
  double safety_factor = 0.10;
  bool enable_dist = true;
  bool enable_rollover = true;

  void validate() const {
    if (!(a_by_bar > 0.0)) throw ConfigError("constraints: a_by_bar must be > 0");
    if (!(eps_dist > 0.0)) throw ConfigError("constraints: eps_dist must be > 0");
    if (!(sigma > 0.0)) throw ConfigError("constraints: sigma must be > 0");
    if (!(safety_factor > 0.0))
      throw ConfigError("constraints: safety_factor must be > 0");
  }
};

// Violation measure of the lateral-acceleration constraint; positive means
// violated.
inline double lateral_accel_violation(double a_by, double g_by,
                                      const ConstraintConfig& cfg) {
  return std::abs(a_by - g_by) - cfg.a_by_bar;
}

// Per-state constraint inputs gathered by the rollout: signed distance at each
// wheel (+inf when no features exist) and the active rollover violation.
struct ConstraintMeasures {
  std::array<double, 4> wheel_sdist{
      std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
      std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  double rollover_pi = -std::numeric_limits<double>::infinity();
  double rollover_epsilon = 1.0;
};

inline double dist_epsilon(const ConstraintConfig& cfg) { return cfg.eps_dist; }
inline double aby_epsilon(const ConstraintConfig& cfg) {
  return cfg.safety_factor * cfg.a_by_bar;
}
inline double esm_epsilon(const ConstraintConfig& cfg) {
  return cfg.safety_factor * cfg.esm_nominal;
}

// Total soft-constraint cost rate: one distance constraint per wheel (against
// the nearest feature) plus the model's rollover constraint.
inline double constraint_set_cost(const ConstraintMeasures& m,
                                  const ConstraintConfig& cfg) {
  double rate = 0.0;
  if (cfg.enable_dist) {
    const SoftConstraintParams dist{cfg.eps_dist, cfg.sigma};
    for (double sd : m.wheel_sdist) {
      if (std::isinf(sd)) continue;
      rate += soft_cost_rate(-sd, dist);
    }
  }
  if (cfg.enable_rollover && std::isfinite(m.rollover_pi))
    rate += soft_cost_rate(m.rollover_pi, {m.rollover_epsilon, cfg.sigma});
  return rate;
}

// Planar wheel footprint positions from (x, y, psi); distance constraints are
// 2D so roll/pitch projection is ignored.
inline std::array<Eigen::Vector2d, 4> wheel_footprint(double x, double y, double psi,
                                                      const VehicleParams& vp) {
  const double c = std::cos(psi), s = std::sin(psi);
  const auto rho = wheel_offsets(vp);
  std::array<Eigen::Vector2d, 4> out;
  for (int i = 0; i < 4; ++i)
    out[i] = Eigen::Vector2d(x + c * rho[i].x() - s * rho[i].y(),
                             y + s * rho[i].x() + c * rho[i].y());
  return out;
}

struct CriticalMu {
  double threshold;  // a_by_bar / g
  bool violable;     // mu >= threshold
};

// Whether the lateral-acceleration (equivalently tire-liftoff) constraint can
// be violated at all given the terrain's friction ceiling.
inline CriticalMu critical_mu(const ConstraintConfig& cfg, double g, double mu) {
  const double threshold = cfg.a_by_bar / g;
  return {threshold, mu >= threshold};
}

// Closed-form critical lateral acceleration for tire liftoff on flat ground.
inline double a_by_bar_formula(const VehicleParams& vp) {
  return vp.M * vp.g / (2.0 * load_transfer_coeffs(vp).K_zy);
}

// Physical-tire normal forces under negligible longitudinal acceleration,
// with in-plane gravity folded into the lateral acceleration. Order fl, fr,
// rl, rr. This is the analysis form whose positivity is equivalent to the
// lateral-acceleration constraint.
inline std::array<double, 4> est_primed_wheel_forces(double a_by_minus_g_by,
                                                     double g_bz,
                                                     const VehicleParams& vp) {
  const LoadTransfer k = load_transfer_coeffs(vp);
  const double base = -vp.M * g_bz / 2.0;
  const double lat = k.K_zy * a_by_minus_g_by;
  return {k.K_zzf / vp.M * (base - lat), k.K_zzf / vp.M * (base + lat),
          k.K_zzr / vp.M * (base - lat), k.K_zzr / vp.M * (base + lat)};
}

}  // namespace tmpc
