#pragma once

#include <cmath>

#include "fescycle/dynamics.hpp"
#include "fescycle/kinematics.hpp"

namespace fescycle {

// Desired crank motion: smooth approach to a constant cadence,
//   speed(t)  = cadence_target * (1 - exp(-ramp_rate * (t - start_time))),
// integrated in closed form for the angle.  ramp_rate == 0 selects a
// constant-cadence profile (speed == cadence_target from start_time on).
struct TrajectorySpec {
  double cadence_target = 0.0;  // rad/s, steady-state desired speed
  double ramp_rate = 1.0;       // 1/s, exponential approach rate
  double start_time = 0.0;      // s
  double start_angle = 0.0;     // rad
};

struct DesiredState {
  double angle = 0.0;
  double speed = 0.0;
  double accel = 0.0;
};

DesiredState desired_trajectory(const TrajectorySpec& traj, double t);

// Tracking errors: e1 = q_d - q, its rate, and the composite
// e2 = e1_dot + alpha*e1.
struct ErrorState {
  double e1 = 0.0;
  double e1_dot = 0.0;
  double e2 = 0.0;
  double norm_z() const { return std::hypot(e1, e2); }
};

struct ControllerGains {
  double alpha = 0.0;       // composite-error blend, must exceed 1/2
  double k1 = 0.0;          // linear feedback on e2
  double k2 = 0.0;          // robust term, constant part
  double k3 = 0.0;          // robust term, ||z|| part
  double k4 = 0.0;          // robust term, ||z||^2 part
  double epsilon = 0.0;     // stimulation-region threshold on -B_k
  double boundary_layer = 0.0;  // >0 replaces sgn(e2) with tanh(e2/layer)
};

ErrorState tracking_errors(const DesiredState& desired, const CrankState& state,
                           double alpha);

// Stimulation command before region gating:
//   v = -k1*e2 - (k2 + k3*||z|| + k4*||z||^2) * sgn(e2),  sgn(0) = 0.
// v is signed; the torque-transfer ratio is negative on the propulsive
// stroke, so negative commands propel the crank forward.
double control_voltage(const ControllerGains& gains, const ErrorState& err);

// Region gating of the command onto the two channels; exactly one channel is
// live inside a stimulation region and both are zero elsewhere.
struct SwitchedInput {
  double u_right = 0.0;
  double u_left = 0.0;
};

SwitchedInput switched_input(const RegionMap& regions, double q, double v);

}  // namespace fescycle
