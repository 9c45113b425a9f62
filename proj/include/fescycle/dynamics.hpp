#pragma once

#include <Eigen/Dense>

#include "fescycle/kinematics.hpp"

namespace fescycle {

// Crank-projected rigid-body model.  The single generalized coordinate is the
// crank angle; both legs are two-link chains (thigh, shank+foot) whose
// configuration is a pure function of the crank angle, so their masses and
// rotary inertias project onto the crank through the chain Jacobians.
struct DynamicsParams {
  double flywheel_inertia = 0.0;  // kg m^2 about the crank axis

  // Per-side body segments; both legs share these values.
  double thigh_mass = 0.0;        // kg
  double shank_mass = 0.0;        // kg, shank + foot + boot
  double thigh_com_ratio = 0.0;   // fraction of thigh length, hip -> knee
  double shank_com_ratio = 0.0;   // fraction of shank length, knee -> pedal
  double thigh_inertia = 0.0;     // kg m^2 about the segment's own COM
  double shank_inertia = 0.0;     // kg m^2 about the segment's own COM

  double gravity = 9.81;          // m/s^2

  double crank_damping = 0.0;     // N m s/rad, braking load at the crank
  double passive_tanh = 0.0;      // N m, stiction-like knee viscoelastic term
  double passive_linear = 0.0;    // N m s/rad, linear knee viscoelastic term

  double muscle_gain_nominal = 1.0;  // N m / V at the knee
  double muscle_gain_min = 0.5;      // certified lower bound on the gain
  double muscle_gain_max = 2.0;      // certified upper bound on the gain
  bool muscle_gain_angle_scaled = false;  // scale nominal by sin(knee angle)

  double disturbance_amplitude = 0.0;  // N m
  double disturbance_frequency = 1.0;  // rad/s
  double disturbance_phase = 0.0;      // rad
};

struct CrankState {
  double angle = 0.0;  // rad, unwrapped
  double speed = 0.0;  // rad/s
};

// One leg's chain quantities at a given crank-arm angle, with first and
// second derivatives with respect to that angle.  Positions are in the crank
// frame (metres).
struct LegFrame {
  Eigen::Vector2d knee, knee_d1, knee_d2;
  Eigen::Vector2d thigh_com, thigh_com_d1, thigh_com_d2;
  Eigen::Vector2d shank_com, shank_com_d1, shank_com_d2;
  double thigh_theta_d1 = 0.0, thigh_theta_d2 = 0.0;
  double shank_theta_d1 = 0.0, shank_theta_d2 = 0.0;
  double knee_interior_angle = 0.0;
};

// Chain state of one leg whose crank arm sits at `arm_angle` (the right arm
// angle, or the crank angle plus pi for the left arm).
LegFrame leg_frame(const RiderGeometry& geom, const DynamicsParams& params,
                   double arm_angle);

// Configuration-dependent torque-balance terms gathered in one chain
// evaluation per leg (the integrator's hot path).
struct DriveTerms {
  double inertia = 0.0;
  double inertia_gradient = 0.0;
  double gravity = 0.0;
};

DriveTerms drive_terms(const DynamicsParams& params, const RiderGeometry& geom,
                       double q);

// Generalized inertia M(q) > 0 seen at the crank.
double inertia(const DynamicsParams& params, const RiderGeometry& geom,
               double q);

// dM/dq in closed form.
double inertia_gradient(const DynamicsParams& params, const RiderGeometry& geom,
                        double q);

// Velocity-coupling coefficient V(q, qdot) = 0.5 * dM/dq * qdot; the
// associated torque is V * qdot.
double coriolis(const DynamicsParams& params, const RiderGeometry& geom,
                double q, double qdot);

// Gravitational torque G(q) = dU/dq with U the total gravitational potential.
double gravity_torque(const DynamicsParams& params, const RiderGeometry& geom,
                      double q);

// Total gravitational potential of both legs (J); reference level is the
// crank axis.
double potential_energy(const DynamicsParams& params, const RiderGeometry& geom,
                        double q);

// Passive viscoelastic knee torque projected to the crank,
// P(qdot) = -p1*tanh(4*qdot) - p2*qdot.  Enters the acceleration with a plus
// sign, so it always dissipates.
double passive_torque(const DynamicsParams& params, double qdot);

// External braking torque -c*qdot (also dissipative on the right-hand side).
double damping_torque(const DynamicsParams& params, double qdot);

// Voltage-to-knee-torque gain for one side, always inside
// [muscle_gain_min, muscle_gain_max].
double muscle_gain(const DynamicsParams& params, const RiderGeometry& geom,
                   double q, Side side);

// Periodic crank disturbance torque at time t.
double disturbance(const DynamicsParams& params, double t);

// Crank acceleration under stimulation voltages u_right / u_left applied at
// the knees through the torque-transfer ratios:
//   qddot = (B_R*W_R*u_R + B_L*W_L*u_L - V*qdot - G - tau_d
//            + damping + passive) / M.
double forward_dynamics(const DynamicsParams& params, const RiderGeometry& geom,
                        const CrankState& state, double t, double u_right,
                        double u_left);

// Certified model bounds over the crank circle and a speed domain.
struct PropertyConstants {
  double inertia_min = 0.0;       // lower bound on M
  double inertia_max = 0.0;       // upper bound on M
  double coriolis_coeff = 0.0;    // |V| <= coriolis_coeff * |qdot|
  double gravity_max = 0.0;       // bound on |G|
  double disturbance_max = 0.0;   // bound on |tau_d|
  double transfer_max = 0.0;      // bound on |transfer ratio|
  double passive_const = 0.0;     // |P| <= passive_const + passive_slope*|qdot|
  double passive_slope = 0.0;
  double damping_coeff = 0.0;     // |brake torque| <= damping_coeff * |qdot|
  double gain_min = 0.0;          // muscle gain bounds
  double gain_max = 0.0;
  double speed_domain = 0.0;      // |qdot| range the constants were checked on
};

// Extremize the model terms over the crank circle (4096-point grids with
// golden-section refinement) and re-verify every bound on 1e5 random samples;
// throws VerificationFailure if any sample violates a claimed bound.
PropertyConstants property_constants(const DynamicsParams& params,
                                     const RiderGeometry& geom,
                                     double speed_domain);

// Sampling re-check used by property_constants, exposed for tests: returns
// the number of violated samples.
int count_property_violations(const DynamicsParams& params,
                              const RiderGeometry& geom,
                              const PropertyConstants& pc, int samples,
                              unsigned seed);

}  // namespace fescycle
