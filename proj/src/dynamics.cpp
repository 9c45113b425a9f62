#include "fescycle/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "fescycle/errors.hpp"
#include "fescycle/search.hpp"

namespace fescycle {
namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr int kScanGrid = 4096;
constexpr double kGoldenTol = 1e-12;

Eigen::Vector2d rot90(const Eigen::Vector2d& v) {
  return {-v.y(), v.x()};
}

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

double side_arm_angle(double q, Side side) {
  return side == Side::Right ? q : q + 3.14159265358979323846;
}

}  // namespace

LegFrame leg_frame(const RiderGeometry& geom, const DynamicsParams& params,
                   double arm_angle) {
  const double lt = geom.thigh_length;
  const double ls = geom.shank_length;

  const Eigen::Vector2d hip(-geom.hip_offset_x, geom.hip_offset_y);
  const Eigen::Vector2d pedal(geom.crank_length * std::cos(arm_angle),
                              -geom.crank_length * std::sin(arm_angle));
  const Eigen::Vector2d pedal_d1(geom.crank_length * -std::sin(arm_angle),
                                 geom.crank_length * -std::cos(arm_angle));
  const Eigen::Vector2d pedal_d2 = -pedal;

  // Hip-to-pedal ray and its length.
  const Eigen::Vector2d r = pedal - hip;
  const Eigen::Vector2d r_d1 = pedal_d1;
  const Eigen::Vector2d r_d2 = pedal_d2;
  const double dist = r.norm();
  if (dist < 1e-12) throw SingularConfiguration("pedal reached the hip joint");
  const double dist_d1 = r.dot(r_d1) / dist;
  const double dist_d2 =
      (r_d1.squaredNorm() + r.dot(r_d2) - dist_d1 * dist_d1) / dist;

  const Eigen::Vector2d u = r / dist;
  const Eigen::Vector2d u_d1 = r_d1 / dist - (dist_d1 / dist) * u;
  const Eigen::Vector2d u_d2 = r_d2 / dist - (2.0 * dist_d1 / dist) * u_d1 -
                               (dist_d2 / dist) * u;
  const Eigen::Vector2d n = rot90(u);
  const Eigen::Vector2d n_d1 = rot90(u_d1);
  const Eigen::Vector2d n_d2 = rot90(u_d2);

  // Knee = hip + along*u + perp*n, elbow-up branch of the two-circle
  // intersection (knee above the hip-pedal chord).
  const double beta = 0.5 * (lt * lt - ls * ls);
  const double along = beta / dist + 0.5 * dist;
  const double along_d1 = (0.5 - beta / (dist * dist)) * dist_d1;
  const double along_d2 = (2.0 * beta / (dist * dist * dist)) * dist_d1 * dist_d1 +
                          (0.5 - beta / (dist * dist)) * dist_d2;
  const double perp_sq = lt * lt - along * along;
  if (perp_sq <= 0.0)
    throw ClosureViolation("leg chain cannot close at this crank angle");
  const double perp = std::sqrt(perp_sq);
  const double perp_d1 = -along * along_d1 / perp;
  const double perp_d2 = -(along_d1 * along_d1 + along * along_d2) / perp -
                         (along * along * along_d1 * along_d1) / (perp_sq * perp);

  LegFrame f;
  f.knee = hip + along * u + perp * n;
  f.knee_d1 = along_d1 * u + along * u_d1 + perp_d1 * n + perp * n_d1;
  f.knee_d2 = along_d2 * u + 2.0 * along_d1 * u_d1 + along * u_d2 +
              perp_d2 * n + 2.0 * perp_d1 * n_d1 + perp * n_d2;

  f.thigh_com = hip + params.thigh_com_ratio * (f.knee - hip);
  f.thigh_com_d1 = params.thigh_com_ratio * f.knee_d1;
  f.thigh_com_d2 = params.thigh_com_ratio * f.knee_d2;
  f.shank_com = f.knee + params.shank_com_ratio * (pedal - f.knee);
  f.shank_com_d1 = (1.0 - params.shank_com_ratio) * f.knee_d1 +
                   params.shank_com_ratio * pedal_d1;
  f.shank_com_d2 = (1.0 - params.shank_com_ratio) * f.knee_d2 +
                   params.shank_com_ratio * pedal_d2;

  // Segment orientation rates; segment lengths are constant so the angular
  // rate of a segment vector v is cross(v, v')/|v|^2.
  const Eigen::Vector2d thigh = f.knee - hip;
  f.thigh_theta_d1 = cross2(thigh, f.knee_d1) / (lt * lt);
  f.thigh_theta_d2 = cross2(thigh, f.knee_d2) / (lt * lt);
  const Eigen::Vector2d shank = pedal - f.knee;
  const Eigen::Vector2d shank_d1 = pedal_d1 - f.knee_d1;
  const Eigen::Vector2d shank_d2 = pedal_d2 - f.knee_d2;
  f.shank_theta_d1 = cross2(shank, shank_d1) / (ls * ls);
  f.shank_theta_d2 = cross2(shank, shank_d2) / (ls * ls);

  const double cos_knee =
      (-thigh).normalized().dot(shank.normalized());
  f.knee_interior_angle = std::acos(std::clamp(cos_knee, -1.0, 1.0));
  return f;
}

DriveTerms drive_terms(const DynamicsParams& params, const RiderGeometry& geom,
                       double q) {
  DriveTerms out;
  out.inertia = params.flywheel_inertia;
  for (const Side side : {Side::Right, Side::Left}) {
    const LegFrame f = leg_frame(geom, params, side_arm_angle(q, side));
    out.inertia += params.thigh_mass * f.thigh_com_d1.squaredNorm() +
                   params.thigh_inertia * f.thigh_theta_d1 * f.thigh_theta_d1 +
                   params.shank_mass * f.shank_com_d1.squaredNorm() +
                   params.shank_inertia * f.shank_theta_d1 * f.shank_theta_d1;
    out.inertia_gradient +=
        2.0 * (params.thigh_mass * f.thigh_com_d1.dot(f.thigh_com_d2) +
               params.thigh_inertia * f.thigh_theta_d1 * f.thigh_theta_d2 +
               params.shank_mass * f.shank_com_d1.dot(f.shank_com_d2) +
               params.shank_inertia * f.shank_theta_d1 * f.shank_theta_d2);
    out.gravity += params.gravity * (params.thigh_mass * f.thigh_com_d1.y() +
                                     params.shank_mass * f.shank_com_d1.y());
  }
  return out;
}

double inertia(const DynamicsParams& params, const RiderGeometry& geom,
               double q) {
  return drive_terms(params, geom, q).inertia;
}

double inertia_gradient(const DynamicsParams& params, const RiderGeometry& geom,
                        double q) {
  return drive_terms(params, geom, q).inertia_gradient;
}

double coriolis(const DynamicsParams& params, const RiderGeometry& geom,
                double q, double qdot) {
  return 0.5 * inertia_gradient(params, geom, q) * qdot;
}

double potential_energy(const DynamicsParams& params, const RiderGeometry& geom,
                        double q) {
  double u = 0.0;
  for (const Side side : {Side::Right, Side::Left}) {
    const LegFrame f = leg_frame(geom, params, side_arm_angle(q, side));
    u += params.gravity * (params.thigh_mass * f.thigh_com.y() +
                           params.shank_mass * f.shank_com.y());
  }
  return u;
}

double gravity_torque(const DynamicsParams& params, const RiderGeometry& geom,
                      double q) {
  return drive_terms(params, geom, q).gravity;
}

double passive_torque(const DynamicsParams& params, double qdot) {
  return -params.passive_tanh * std::tanh(4.0 * qdot) -
         params.passive_linear * qdot;
}

double damping_torque(const DynamicsParams& params, double qdot) {
  return -params.crank_damping * qdot;
}

double muscle_gain(const DynamicsParams& params, const RiderGeometry& geom,
                   double q, Side side) {
  double gain = params.muscle_gain_nominal;
  if (params.muscle_gain_angle_scaled) {
    gain *= std::sin(knee_angle(geom, q, side));
  }
  return std::clamp(gain, params.muscle_gain_min, params.muscle_gain_max);
}

double disturbance(const DynamicsParams& params, double t) {
  return params.disturbance_amplitude *
         std::sin(params.disturbance_frequency * t + params.disturbance_phase);
}

double forward_dynamics(const DynamicsParams& params, const RiderGeometry& geom,
                        const CrankState& state, double t, double u_right,
                        double u_left) {
  const double q = state.angle;
  const double qd = state.speed;
  const DriveTerms terms = drive_terms(params, geom, q);
  const double drive =
      torque_transfer_ratio(geom, q, Side::Right) *
          muscle_gain(params, geom, q, Side::Right) * u_right +
      torque_transfer_ratio(geom, q, Side::Left) *
          muscle_gain(params, geom, q, Side::Left) * u_left;
  const double torque = drive - 0.5 * terms.inertia_gradient * qd * qd -
                        terms.gravity - disturbance(params, t) +
                        damping_torque(params, qd) + passive_torque(params, qd);
  return torque / terms.inertia;
}

PropertyConstants property_constants(const DynamicsParams& params,
                                     const RiderGeometry& geom,
                                     double speed_domain) {
  if (speed_domain <= 0.0)
    throw ValidationFailure("speed domain for model bounds must be positive");
  validate_geometry(geom);
  if (params.muscle_gain_min <= 0.0 ||
      params.muscle_gain_max < params.muscle_gain_min)
    throw ValidationFailure("muscle gain bounds must satisfy 0 < min <= max");

  PropertyConstants pc;
  pc.speed_domain = speed_domain;

  const auto m_of = [&](double q) { return inertia(params, geom, q); };
  const auto neg_m_of = [&](double q) { return -m_of(q); };
  const auto abs_md_of = [&](double q) {
    return std::abs(inertia_gradient(params, geom, q));
  };
  const auto abs_g_of = [&](double q) {
    return std::abs(gravity_torque(params, geom, q));
  };

  const double q_min_m =
      grid_golden_max(neg_m_of, 0.0, kTwoPi, kScanGrid, kGoldenTol);
  const double q_max_m =
      grid_golden_max(m_of, 0.0, kTwoPi, kScanGrid, kGoldenTol);
  pc.inertia_min = m_of(q_min_m);
  pc.inertia_max = m_of(q_max_m);
  if (pc.inertia_min <= 0.0)
    throw ValidationFailure("generalized inertia is not positive");

  const double q_max_md =
      grid_golden_max(abs_md_of, 0.0, kTwoPi, kScanGrid, kGoldenTol);
  pc.coriolis_coeff = 0.5 * abs_md_of(q_max_md);
  const double q_max_g =
      grid_golden_max(abs_g_of, 0.0, kTwoPi, kScanGrid, kGoldenTol);
  pc.gravity_max = abs_g_of(q_max_g);

  pc.disturbance_max = std::abs(params.disturbance_amplitude);
  pc.transfer_max = max_abs_torque_ratio(geom);
  pc.passive_const = params.passive_tanh;
  pc.passive_slope = params.passive_linear;
  pc.damping_coeff = params.crank_damping;
  pc.gain_min = params.muscle_gain_min;
  pc.gain_max = params.muscle_gain_max;

  const int violations =
      count_property_violations(params, geom, pc, 100000, 20240917u);
  if (violations != 0)
    throw VerificationFailure("sampled model terms violate the claimed bounds");
  return pc;
}

int count_property_violations(const DynamicsParams& params,
                              const RiderGeometry& geom,
                              const PropertyConstants& pc, int samples,
                              unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, kTwoPi);
  std::uniform_real_distribution<double> speed(-pc.speed_domain,
                                               pc.speed_domain);
  std::uniform_real_distribution<double> time(0.0, 1000.0);

  // Grid extremes carry golden-section accuracy; allow only rounding slack.
  const double tol = 1e-9;
  int bad = 0;
  for (int i = 0; i < samples; ++i) {
    const double q = angle(rng);
    const double qd = speed(rng);
    const double t = time(rng);

    const double m = inertia(params, geom, q);
    if (m < pc.inertia_min - tol || m > pc.inertia_max + tol) ++bad;

    const double v = coriolis(params, geom, q, qd);
    if (std::abs(v) > pc.coriolis_coeff * std::abs(qd) + tol) ++bad;

    // Structural identity: the velocity coupling is exactly half the inertia
    // rate, so the power balance has no spurious source term.
    const double md = inertia_gradient(params, geom, q);
    if (std::abs(0.5 * md * qd - v) > 1e-12 * std::max(1.0, std::abs(v))) ++bad;

    if (std::abs(gravity_torque(params, geom, q)) > pc.gravity_max + tol) ++bad;
    if (std::abs(disturbance(params, t)) > pc.disturbance_max + tol) ++bad;

    for (const Side side : {Side::Right, Side::Left}) {
      if (std::abs(torque_transfer_ratio(geom, q, side)) >
          pc.transfer_max + tol)
        ++bad;
      const double w = muscle_gain(params, geom, q, side);
      if (w < pc.gain_min - tol || w > pc.gain_max + tol) ++bad;
    }

    const double p = passive_torque(params, qd);
    if (std::abs(p) > pc.passive_const + pc.passive_slope * std::abs(qd) + tol)
      ++bad;

    if (std::abs(damping_torque(params, qd)) >
        pc.damping_coeff * std::abs(qd) + tol)
      ++bad;
  }
  return bad;
}

}  // namespace fescycle
