#pragma once

#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "tmpc/errors.hpp"
#include "tmpc/terrain.hpp"

namespace tmpc {

inline constexpr double kGravity = 9.81;  // m/s^2
inline constexpr double kVbxFloor = 0.1;  // m/s, keeps slip-angle arctans conditioned
inline constexpr double kGimbalMargin = 1e-3;  // rad, exclusion around |theta| = pi/2

// Inertial, geometric, suspension, and steering parameters. Defaults describe
// the full-scale reference test vehicle.
struct VehicleParams {
  double M = 969.0;        // kg
  double J_xx = 280.9;     // kg m^2
  double J_yy = 692.1;     // kg m^2
  double J_zz = 810.7;     // kg m^2
  double L_f = 1.565;      // m, CoM to front axle
  double L_r = 1.148;      // m, CoM to rear axle
  double e = 1.280;        // m, wheel track
  double h = 0.380;        // m, CoM height above axles
  double R = 0.291;        // m, tire radius
  double k_f = 4.2e4;      // N/m
  double k_r = 5.8e4;      // N/m
  double b_f = 3.1e3;      // N s/m
  double b_r = 4.3e3;      // N s/m
  double delta_max = 0.639;       // rad
  double delta_rate_max = 1.0;    // rad/s
  double g = kGravity;

  void validate() const {
    auto pos = [](double v, const char* n) {
      if (!(v > 0.0)) throw ConfigError(std::string("vehicle: ") + n + " must be > 0");
    };
    pos(M, "M"); pos(J_xx, "J_xx"); pos(J_yy, "J_yy"); pos(J_zz, "J_zz");
    pos(L_f, "L_f"); pos(L_r, "L_r"); pos(e, "e"); pos(h, "h"); pos(R, "R");
    pos(k_f, "k_f"); pos(k_r, "k_r"); pos(b_f, "b_f"); pos(b_r, "b_r");
    pos(delta_max, "delta_max"); pos(delta_rate_max, "delta_rate_max"); pos(g, "g");
    if (delta_max >= M_PI / 2) throw ConfigError("vehicle: delta_max must be < pi/2");
  }
};

struct TireParams {
  double C = 6.1;   // 1/rad, cornering stiffness in the linear region
  double mu = 0.6;  // max |F_y/F_z|

  void validate() const {
    if (!(C > 0.0)) throw ConfigError("tire: C must be > 0");
    if (!(mu > 0.0 && mu <= 2.0)) throw ConfigError("tire: mu must be in (0, 2]");
  }
};

struct LoadTransfer {
  double K_zzf;  // kg, front vertical
  double K_zzr;  // kg, rear vertical
  double K_zx;   // kg, longitudinal
  double K_zy;   // kg, lateral
};

inline LoadTransfer load_transfer_coeffs(const VehicleParams& vp) {
  const double L = vp.L_f + vp.L_r;
  return {vp.M * vp.L_r / L, vp.M * vp.L_f / L, vp.M * (vp.h + vp.R) / L,
          vp.M * (vp.h + vp.R) / vp.e};
}

// Sigmoid lateral tire force; odd in alpha, saturating at mu*F_z.
inline double tire_lateral_force(double alpha, double f_z, const TireParams& tp) {
  const double ca = tp.C * alpha;
  return f_z * (-ca * tp.mu) / std::sqrt(tp.mu * tp.mu + ca * ca);
}

// ---------------------------------------------------------------------------
// Rotations.

// Intrinsic 1-2-3 convention: world -> body by phi about w_x, theta about the
// intermediate y, psi about b_z. Returns the body-to-world matrix.
inline Eigen::Matrix3d rot_123(double phi, double theta, double psi) {
  const double cf = std::cos(phi), sf = std::sin(phi);
  const double ct = std::cos(theta), st = std::sin(theta);
  const double cp = std::cos(psi), sp = std::sin(psi);
  Eigen::Matrix3d r;
  r << ct * cp, -ct * sp, st,
      cf * sp + cp * sf * st, cf * cp - sf * st * sp, -ct * sf,
      sf * sp - cf * cp * st, cp * sf + cf * st * sp, cf * ct;
  return r;
}

// Intrinsic 3-2-1 (yaw-pitch-roll) convention. Returns the body-to-world matrix.
inline Eigen::Matrix3d rot_321(double psi, double theta, double phi) {
  const double cf = std::cos(phi), sf = std::sin(phi);
  const double ct = std::cos(theta), st = std::sin(theta);
  const double cp = std::cos(psi), sp = std::sin(psi);
  Eigen::Matrix3d r;
  r << cp * ct, cp * sf * st - cf * sp, sf * sp + cf * cp * st,
      ct * sp, cf * cp + sf * sp * st, cf * sp * st - cp * sf,
      -st, ct * sf, cf * ct;
  return r;
}

// Euler angle rates (psi_dot, theta_dot, phi_dot) from body angular velocity
// under the 3-2-1 convention. Singular at |theta| = pi/2.
inline Eigen::Vector3d euler_rates_321(const Eigen::Vector3d& omega_body,
                                       double theta, double phi) {
  if (std::abs(theta) >= M_PI / 2 - kGimbalMargin)
    throw std::domain_error("euler_rates_321: pitch too close to gimbal lock");
  const double cf = std::cos(phi), sf = std::sin(phi);
  const double ct = std::cos(theta), tt = std::tan(theta);
  return {(sf * omega_body.y() + cf * omega_body.z()) / ct,
          cf * omega_body.y() - sf * omega_body.z(),
          omega_body.x() + sf * tt * omega_body.y() + cf * tt * omega_body.z()};
}

// Extract 3-2-1 angles (psi, theta, phi) from a body-to-world rotation.
inline Eigen::Vector3d euler_321_from_rot(const Eigen::Matrix3d& r) {
  const double theta = -std::asin(std::clamp(r(2, 0), -1.0, 1.0));
  return {std::atan2(r(1, 0), r(0, 0)), theta, std::atan2(r(2, 1), r(2, 2))};
}

// ---------------------------------------------------------------------------
// Control and states.

// Zero-order-hold control: steering rate and longitudinal velocity rate.
struct Control {
  double delta_rate = 0.0;  // rad/s
  double v_bx_rate = 0.0;   // m/s^2
};

struct ControlSequence {
  std::vector<Control> entries;
  double dt_zoh = 0.25;  // s each entry is held

  double horizon() const { return dt_zoh * static_cast<double>(entries.size()); }
  const Control& at_time(double t) const {
    const auto k = std::min(static_cast<std::size_t>(std::max(t, 0.0) / dt_zoh),
                            entries.size() - 1);
    return entries[k];
  }
};

// Extended single-track state: planar bicycle on a local tangent plane.
struct EstState {
  double x = 0.0;         // m
  double y = 0.0;         // m
  double psi = 0.0;       // rad
  double v_by = 0.0;      // m/s
  double omega_bz = 0.0;  // rad/s
  double delta = 0.0;     // rad
  double v_bx = 0.0;      // m/s

  static constexpr int kDim = 7;
  std::array<double, kDim> as_array() const {
    return {x, y, psi, v_by, omega_bz, delta, v_bx};
  }
  static EstState from_array(const std::array<double, kDim>& a) {
    return {a[0], a[1], a[2], a[3], a[4], a[5], a[6]};
  }
};

// Single rigid body state: 3D chassis with per-wheel spring-damper suspension.
struct SrbState {
  double x = 0.0, y = 0.0, z = 0.0;                            // m
  double psi = 0.0, theta = 0.0, phi = 0.0;                    // rad, 3-2-1
  double v_bx = 0.0, v_by = 0.0, v_bz = 0.0;                   // m/s body frame
  double omega_bx = 0.0, omega_by = 0.0, omega_bz = 0.0;       // rad/s body frame
  double delta = 0.0;                                          // rad

  static constexpr int kDim = 13;
  std::array<double, kDim> as_array() const {
    return {x, y, z, psi, theta, phi, v_bx, v_by, v_bz,
            omega_bx, omega_by, omega_bz, delta};
  }
  static SrbState from_array(const std::array<double, kDim>& a) {
    return {a[0], a[1], a[2], a[3], a[4], a[5], a[6],
            a[7], a[8], a[9], a[10], a[11], a[12]};
  }
};

enum class Wheel { kFl = 0, kFr = 1, kRl = 2, kRr = 3 };

// Nominal contact patch offsets in the body frame, order fl, fr, rl, rr.
inline std::array<Eigen::Vector3d, 4> wheel_offsets(const VehicleParams& vp) {
  const double zo = -(vp.h + vp.R);
  return {Eigen::Vector3d(vp.L_f, vp.e / 2, zo), Eigen::Vector3d(vp.L_f, -vp.e / 2, zo),
          Eigen::Vector3d(-vp.L_r, vp.e / 2, zo), Eigen::Vector3d(-vp.L_r, -vp.e / 2, zo)};
}

// Per-step tire diagnostics (not part of the state vector).
struct TireOutputs {
  std::array<double, 4> f_z{};         // N per wheel fl, fr, rl, rr
  std::array<double, 4> f_y{};         // N; EST fills front/rear into fl/rl slots
  std::array<double, 4> slip_angle{};  // rad
  std::array<double, 4> chi{};         // m, SRB suspension extension
  std::array<double, 4> chi_dot{};     // m/s
};

// ---------------------------------------------------------------------------
// Extended single-track model.

// Roll/pitch of the local tangent plane under the 1-2-3 convention (the plane
// is heading-independent; yaw rotates within it).
struct PlaneAttitude {
  double phi = 0.0;
  double theta = 0.0;
};

inline PlaneAttitude est_plane_attitude(const Heightmap& terrain, double x, double y) {
  const Eigen::Vector3d tau = normal_at(terrain, x, y);
  const double theta = std::asin(std::clamp(tau.x(), -1.0, 1.0));
  const double ct = std::cos(theta);
  const double sphi = std::clamp(-tau.y() / std::max(ct, 1e-9), -1.0, 1.0);
  return {std::asin(sphi), theta};
}

struct EstDiagnostics {
  double g_bx = 0.0, g_by = 0.0, g_bz = 0.0;  // gravity in body frame
  double a_bx = 0.0, a_by = 0.0;              // CoM acceleration components
  double alpha_f = 0.0, alpha_r = 0.0;        // virtual tire slip angles
  double f_zf = 0.0, f_zr = 0.0;              // virtual tire normal loads
  double f_yf = 0.0, f_yr = 0.0;              // virtual tire lateral forces
  PlaneAttitude plane;
};

inline EstState est_derivative(const EstState& s, const Control& u,
                               const Heightmap& terrain, const VehicleParams& vp,
                               const TireParams& tp, EstDiagnostics* diag = nullptr) {
  const PlaneAttitude att = est_plane_attitude(terrain, s.x, s.y);
  const Eigen::Matrix3d r = rot_123(att.phi, att.theta, s.psi);
  const Eigen::Vector3d g_b = r.transpose() * Eigen::Vector3d(0.0, 0.0, -vp.g);

  const double v_bx_eff = std::max(s.v_bx, kVbxFloor);
  const double alpha_f =
      std::atan((s.v_by + s.omega_bz * vp.L_f) / v_bx_eff) - s.delta;
  const double alpha_r = std::atan((s.v_by - s.omega_bz * vp.L_r) / v_bx_eff);

  const LoadTransfer k = load_transfer_coeffs(vp);
  const double a_bx = u.v_bx_rate - s.omega_bz * s.v_by;
  // Virtual (axle-summed) normal loads; clamped at zero before the tire model.
  const double f_zf = std::max(-k.K_zzf * g_b.z() - k.K_zx * a_bx, 0.0);
  const double f_zr = std::max(-k.K_zzr * g_b.z() + k.K_zx * a_bx, 0.0);
  const double f_yf = tire_lateral_force(alpha_f, f_zf, tp);
  const double f_yr = tire_lateral_force(alpha_r, f_zr, tp);

  EstState d;
  const Eigen::Vector3d v_w = r * Eigen::Vector3d(s.v_bx, s.v_by, 0.0);
  d.x = v_w.x();
  d.y = v_w.y();
  d.psi = s.omega_bz;
  d.v_by = (f_yf + f_yr) / vp.M + g_b.y() - s.omega_bz * s.v_bx;
  d.omega_bz = (f_yf * vp.L_f * std::cos(s.delta) - f_yr * vp.L_r) / vp.J_zz;
  d.delta = u.delta_rate;
  d.v_bx = u.v_bx_rate;

  if (diag) {
    diag->g_bx = g_b.x();
    diag->g_by = g_b.y();
    diag->g_bz = g_b.z();
    diag->a_bx = a_bx;
    diag->a_by = d.v_by + s.omega_bz * s.v_bx;  // = (f_yf+f_yr)/M + g_by
    diag->alpha_f = alpha_f;
    diag->alpha_r = alpha_r;
    diag->f_zf = f_zf;
    diag->f_zr = f_zr;
    diag->f_yf = f_yf;
    diag->f_yr = f_yr;
    diag->plane = att;
  }
  return d;
}

// Normal force on each physical tire from the bilinear load-transfer
// expressions. Negative values are the liftoff signal and are not clamped.
inline TireOutputs est_tire_normals(const EstState& s, const Control& u,
                                    const Heightmap& terrain, const VehicleParams& vp,
                                    const TireParams& tp) {
  EstDiagnostics diag;
  (void)est_derivative(s, u, terrain, vp, tp, &diag);
  const LoadTransfer k = load_transfer_coeffs(vp);
  const double front = -k.K_zzf * diag.g_bz - k.K_zx * diag.a_bx;
  const double rear = -k.K_zzr * diag.g_bz + k.K_zx * diag.a_bx;
  // In-plane gravity is folded into the lateral transfer term so the
  // expressions stay valid on slopes.
  const double lat = k.K_zy * (diag.a_by - diag.g_by) / (-vp.M * diag.g_bz);
  TireOutputs out;
  out.f_z = {front * (0.5 - lat), front * (0.5 + lat), rear * (0.5 - lat),
             rear * (0.5 + lat)};
  out.f_y = {diag.f_yf, 0.0, diag.f_yr, 0.0};
  out.slip_angle = {diag.alpha_f, diag.alpha_f, diag.alpha_r, diag.alpha_r};
  return out;
}

// ---------------------------------------------------------------------------
// Single rigid body model.

struct SrbDiagnostics {
  Eigen::Vector3d g_b = Eigen::Vector3d::Zero();
  std::array<double, 4> chi{}, chi_dot{}, f_z{}, f_y{}, slip_angle{};
  double f_y_sum = 0.0, f_z_sum = 0.0;
  Eigen::Vector3d moment = Eigen::Vector3d::Zero();
};

inline SrbState srb_derivative(const SrbState& s, const Control& u,
                               const Heightmap& terrain, const VehicleParams& vp,
                               const TireParams& tp, SrbDiagnostics* diag = nullptr) {
  if (std::abs(s.theta) >= M_PI / 2 - kGimbalMargin)
    throw std::domain_error("srb_derivative: pitch too close to gimbal lock");

  const Eigen::Matrix3d r = rot_321(s.psi, s.theta, s.phi);
  const Eigen::Vector3d g_b = r.transpose() * Eigen::Vector3d(0.0, 0.0, -vp.g);
  const Eigen::Vector3d v_b(s.v_bx, s.v_by, s.v_bz);
  const Eigen::Vector3d omega_b(s.omega_bx, s.omega_by, s.omega_bz);
  const Eigen::Vector3d pos(s.x, s.y, s.z);

  const LoadTransfer lt = load_transfer_coeffs(vp);
  const auto rho = wheel_offsets(vp);
  const std::array<double, 4> k_i{vp.k_f, vp.k_f, vp.k_r, vp.k_r};
  const std::array<double, 4> b_i{vp.b_f, vp.b_f, vp.b_r, vp.b_r};
  const std::array<double, 4> kzz_i{lt.K_zzf, lt.K_zzf, lt.K_zzr, lt.K_zzr};

  const double cd = std::cos(s.delta);
  double f_y_sum = 0.0, f_z_sum = 0.0;
  Eigen::Vector3d moment = Eigen::Vector3d::Zero();
  // Rear-axle constraining force holding the prescribed longitudinal velocity.
  const double f_x_rear = 0.5 * vp.M *
      (u.v_bx_rate - g_b.x() + s.omega_by * s.v_bz - s.omega_bz * s.v_by);

  for (int i = 0; i < 4; ++i) {
    const bool front = i < 2;
    const Eigen::Vector3d p_w = pos + r * rho[i];
    const Eigen::Vector3d v_i = v_b + omega_b.cross(rho[i]);

    const Slope sl = gradient_at(terrain, p_w.x(), p_w.y());
    const Eigen::Vector3d tau_w(-sl.fx, -sl.fy, 1.0);
    const Eigen::Vector3d tau_b = r.transpose() * tau_w;
    const double tau_bz = std::max(tau_b.z(), 1e-6);

    const double chi =
        (p_w.z() - height_at(terrain, p_w.x(), p_w.y())) / tau_bz;
    const double chi_dot =
        tau_b.dot(v_i - chi * omega_b.cross(Eigen::Vector3d::UnitZ())) / tau_bz;

    const double f_s = 0.5 * vp.g * kzz_i[i];
    const double f_k = std::max(f_s - k_i[i] * chi, 0.0);
    const double f_b = f_k > 0.0 ? std::max(-b_i[i] * chi_dot, -f_k) : 0.0;
    const double f_z = f_k + f_b;

    const double delta_i = front ? s.delta : 0.0;
    const double alpha =
        std::atan(v_i.y() / std::max(v_i.x(), kVbxFloor)) - delta_i;
    const double f_y = tire_lateral_force(alpha, f_z, tp);

    const double cos_di = front ? cd : 1.0;
    f_y_sum += f_y * cos_di;
    f_z_sum += f_z;
    const Eigen::Vector3d force(front ? 0.0 : f_x_rear, f_y * cos_di, f_z);
    moment += rho[i].cross(force);

    if (diag) {
      diag->chi[i] = chi;
      diag->chi_dot[i] = chi_dot;
      diag->f_z[i] = f_z;
      diag->f_y[i] = f_y;
      diag->slip_angle[i] = alpha;
    }
  }

  const Eigen::Vector3d euler_rates = euler_rates_321(omega_b, s.theta, s.phi);
  const Eigen::Vector3d v_w = r * v_b;

  SrbState d;
  d.x = v_w.x();
  d.y = v_w.y();
  d.z = v_w.z();
  d.psi = euler_rates.x();
  d.theta = euler_rates.y();
  d.phi = euler_rates.z();
  d.v_bx = u.v_bx_rate;
  d.v_by = f_y_sum / vp.M + g_b.y() + s.omega_bx * s.v_bz - s.omega_bz * s.v_bx;
  d.v_bz = f_z_sum / vp.M + g_b.z() - s.omega_bx * s.v_by + s.omega_by * s.v_bx;
  d.omega_bx = (moment.x() + (vp.J_yy - vp.J_zz) * s.omega_by * s.omega_bz) / vp.J_xx;
  d.omega_by = (moment.y() - (vp.J_xx - vp.J_zz) * s.omega_bx * s.omega_bz) / vp.J_yy;
  d.omega_bz = (moment.z() + (vp.J_xx - vp.J_yy) * s.omega_bx * s.omega_by) / vp.J_zz;
  d.delta = u.delta_rate;

  if (diag) {
    diag->g_b = g_b;
    diag->f_y_sum = f_y_sum;
    diag->f_z_sum = f_z_sum;
    diag->moment = moment;
  }
  return d;
}

// ---------------------------------------------------------------------------
// Model traits + fixed-step integration.

struct EstModel {
  using State = EstState;
  static State derivative(const State& s, const Control& u, const Heightmap& t,
                          const VehicleParams& vp, const TireParams& tp) {
    return est_derivative(s, u, t, vp, tp);
  }
};

struct SrbModel {
  using State = SrbState;
  static State derivative(const State& s, const Control& u, const Heightmap& t,
                          const VehicleParams& vp, const TireParams& tp) {
    return srb_derivative(s, u, t, vp, tp);
  }
};

enum class Scheme { kEuler, kRk4 };

namespace detail {

template <typename State>
State add_scaled(const State& s, const State& d, double dt) {
  auto a = s.as_array();
  const auto b = d.as_array();
  for (int i = 0; i < State::kDim; ++i) a[i] += dt * b[i];
  return State::from_array(a);
}

template <typename State>
bool all_finite(const State& s) {
  for (double v : s.as_array())
    if (!std::isfinite(v)) return false;
  return true;
}

template <typename State>
void clamp_steering(State& s, const VehicleParams& vp) {
  s.delta = std::clamp(s.delta, -vp.delta_max, vp.delta_max);
}

}  // namespace detail

// One fixed step of the configured scheme; steering saturates at delta_max.
template <typename Model>
typename Model::State integrate_step(const typename Model::State& s, const Control& u,
                                     const Heightmap& terrain, const VehicleParams& vp,
                                     const TireParams& tp, double dt, Scheme scheme) {
  using State = typename Model::State;
  State out;
  if (scheme == Scheme::kEuler) {
    out = detail::add_scaled(s, Model::derivative(s, u, terrain, vp, tp), dt);
  } else {
    const State k1 = Model::derivative(s, u, terrain, vp, tp);
    const State k2 = Model::derivative(detail::add_scaled(s, k1, dt / 2), u, terrain, vp, tp);
    const State k3 = Model::derivative(detail::add_scaled(s, k2, dt / 2), u, terrain, vp, tp);
    const State k4 = Model::derivative(detail::add_scaled(s, k3, dt), u, terrain, vp, tp);
    auto a = s.as_array();
    const auto a1 = k1.as_array(), a2 = k2.as_array(), a3 = k3.as_array(),
               a4 = k4.as_array();
    for (int i = 0; i < State::kDim; ++i)
      a[i] += dt / 6.0 * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i]);
    out = State::from_array(a);
  }
  detail::clamp_steering(out, vp);
  return out;
}

// Integrate a ZOH control sequence; returns states at every dt_int step,
// including the initial state. dt_int must divide the ZOH period.
template <typename Model>
std::vector<typename Model::State> integrate(
    const typename Model::State& s0, const ControlSequence& controls,
    const Heightmap& terrain, const VehicleParams& vp, const TireParams& tp,
    double dt_int, Scheme scheme = Scheme::kEuler) {
  const int steps_per_seg =
      static_cast<int>(std::round(controls.dt_zoh / dt_int));
  if (steps_per_seg < 1 ||
      std::abs(steps_per_seg * dt_int - controls.dt_zoh) > 1e-9)
    throw ConfigError("integrate: dt_int must divide the ZOH period");

  std::vector<typename Model::State> traj;
  traj.reserve(controls.entries.size() * steps_per_seg + 1);
  traj.push_back(s0);
  int step = 0;
  for (const Control& u : controls.entries) {
    for (int k = 0; k < steps_per_seg; ++k, ++step) {
      auto next =
          integrate_step<Model>(traj.back(), u, terrain, vp, tp, dt_int, scheme);
      if (!detail::all_finite(next))
        throw IntegrationError("integrate: state diverged", step);
      traj.push_back(next);
    }
  }
  return traj;
}

}  // namespace tmpc
