#include "fescycle/controller.hpp"

#include <cmath>

namespace fescycle {
namespace {

double signum(double x) {
  if (x > 0.0) return 1.0;
  if (x < 0.0) return -1.0;
  return 0.0;
}

}  // namespace

DesiredState desired_trajectory(const TrajectorySpec& traj, double t) {
  DesiredState d;
  const double tau = t - traj.start_time;
  if (tau <= 0.0) {
    d.angle = traj.start_angle;
    return d;
  }
  if (traj.ramp_rate == 0.0) {
    d.angle = traj.start_angle + traj.cadence_target * tau;
    d.speed = traj.cadence_target;
    return d;
  }
  const double decay = std::exp(-traj.ramp_rate * tau);
  d.speed = traj.cadence_target * (1.0 - decay);
  d.angle = traj.start_angle + traj.cadence_target * tau -
            d.speed / traj.ramp_rate;
  d.accel = traj.cadence_target * traj.ramp_rate * decay;
  return d;
}

ErrorState tracking_errors(const DesiredState& desired, const CrankState& state,
                           double alpha) {
  ErrorState e;
  e.e1 = desired.angle - state.angle;
  e.e1_dot = desired.speed - state.speed;
  e.e2 = e.e1_dot + alpha * e.e1;
  return e;
}

double control_voltage(const ControllerGains& gains, const ErrorState& err) {
  const double z = err.norm_z();
  const double robust = gains.k2 + gains.k3 * z + gains.k4 * z * z;
  const double direction = gains.boundary_layer > 0.0
                               ? std::tanh(err.e2 / gains.boundary_layer)
                               : signum(err.e2);
  return -gains.k1 * err.e2 - robust * direction;
}

SwitchedInput switched_input(const RegionMap& regions, double q, double v) {
  SwitchedInput u;
  switch (regions.tag_at(q)) {
    case RegionTag::RightStim:
      u.u_right = v;
      break;
    case RegionTag::LeftStim:
      u.u_left = v;
      break;
    case RegionTag::Uncontrolled:
      break;
  }
  return u;
}

}  // namespace fescycle
