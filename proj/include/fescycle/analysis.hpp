#pragma once

#include <string>
#include <vector>

#include "fescycle/controller.hpp"
#include "fescycle/dynamics.hpp"
#include "fescycle/kinematics.hpp"
#include "fescycle/scenario.hpp"

namespace fescycle {

// Sandwich weights for the tracking-error energy
// V = (e1^2 + M(q)*e2^2)/2:  lower*||z||^2 <= V <= upper*||z||^2.
struct LyapunovWeights {
  double lower = 0.0;
  double upper = 0.0;
};

LyapunovWeights lyapunov_weights(double inertia_min, double inertia_max);

double error_energy(double inertia, double e1, double e2);

// Polynomial bound on the lumped model torque chi that the robust terms must
// dominate: |chi| <= c1 + c2*||z|| + c3*||z||^2, valid for ||z|| <= z_domain
// (z_domain == 0 means valid for all z).
struct ChiBound {
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
  double z_domain = 0.0;
};

// Symbolic worst-case collection of the model terms; valid for all z.
ChiBound chi_bound_collection(const PropertyConstants& props,
                              const TrajectorySpec& traj, double alpha);

// The lumped torque evaluated literally from the dynamics at a sampled error
// state (used by the sampling validation and the tests).
double chi_value(const DynamicsParams& params, const RiderGeometry& geom,
                 const TrajectorySpec& traj, double alpha, double t, double e1,
                 double e2);

// Counts random samples (q implied by e1, ||z|| <= z_max, t) violating the
// claimed polynomial bound.
int count_chi_violations(const DynamicsParams& params,
                         const RiderGeometry& geom, const TrajectorySpec& traj,
                         double alpha, const ChiBound& bound, double z_max,
                         int samples, unsigned seed);

// Symbolic collection followed by a 1e5-sample validation against the literal
// chi; throws ValidationFailure if any sample violates the bound.
ChiBound chi_bound_constants(const PropertyConstants& props,
                             const DynamicsParams& params,
                             const RiderGeometry& geom,
                             const TrajectorySpec& traj, double alpha,
                             double z_max);

// Domain-restricted re-collection: given the globally valid bound, move
// weight from the slope/curvature coefficients into the constant term so the
// bound still dominates on ||z|| <= z_cap.  Returns the minimal c1 for the
// requested (c2, c3).
ChiBound tighten_chi_bound(const ChiBound& global_bound, double c2, double c3,
                           double z_cap);

// Exponential decay rate of the error energy inside stimulation regions,
// gamma = min(alpha - 1/2, epsilon*gain_min*k1 - 1/2); throws
// GainConditionViolated when a term is nonpositive.
double decay_rate(double alpha, double k1, double epsilon, double gain_min);

struct GainCheck {
  std::string name;
  double required = 0.0;
  double actual = 0.0;
  double margin = 0.0;
  bool pass = false;
};

std::vector<GainCheck> verify_gain_conditions(const ControllerGains& gains,
                                              const ChiBound& bound,
                                              double gain_min);
bool all_pass(const std::vector<GainCheck>& checks);
std::string render_gain_report(const std::vector<GainCheck>& checks);

// Error-norm envelope inside a stimulation region:
// sqrt(upper/lower)*z_on*exp(-gamma*dt/(2*upper)).
double decay_envelope(double z_on, double gamma, const LyapunovWeights& w,
                      double dt);
// Energy form: v_on*exp(-gamma*dt/lambda2).
double decay_envelope_energy(double v_on, double gamma, double lambda2,
                             double dt);

// Coefficients of the comparison inequality governing the uncontrolled-region
// energy, dV/dt <= (c1/sqrt(l1))*V^(1/2) + a2*V + a1*V^(3/2).
struct GrowthConstants {
  double a1 = 0.0;
  double a2 = 0.0;
  double a3 = 0.0;
};

// a1 = c3/l1^(3/2), a2 = (c2 + 1/2)/l1, a3 = 4*a1*c1/sqrt(l1) - a2^2; throws
// NegativeA3 when the tangent-form solution below is undefined.
GrowthConstants growth_constants(const ChiBound& bound, double lambda1);

// Tangent-form growth envelopes.  The a3 constant enters these expressions
// verbatim; the resulting curve majorizes the comparison inequality's
// solutions whenever a3 >= 1 (in 1/s^2 units), which certification enforces.
double growth_envelope(double z_off, const GrowthConstants& g,
                       const LyapunovWeights& w, double dt);
double growth_envelope_energy(double v_off, const GrowthConstants& g,
                              double dt);

// Strict ceiling on time spent in an uncontrolled region before the growth
// envelope escapes: (1/a3)*[2*pi - 4*arctan((2*a1/a3)*sqrt(l2)*z_off + a2/a3)].
double rdt_max_offtime(double z_off, const GrowthConstants& g, double lambda2);

// Minimum time to traverse a stimulation region of the given arc length:
// region_length / (max_speed + (1+alpha)*sqrt(l2/l1)*z_on).
double min_ontime_bound(double region_length, double max_desired_speed,
                        double alpha, const LyapunovWeights& w, double z_on);

// Inverse form: the ceiling on desired speed that still guarantees
// dt_required inside the region; throws InfeasibleTrajectory if nonpositive.
double max_speed_for_ontime(double region_length, double dt_required,
                            double alpha, const LyapunovWeights& w,
                            double z_on);

// Least entry speed from which ballistic (zero-input) motion traverses an
// uncontrolled gap within dt_max_off, worst case over both gaps and a grid of
// disturbance phases.  monotone reports whether crossing time behaved
// monotonically on the probe grid (otherwise a conservative grid scan chose
// the result).
struct CriticalVelocity {
  double value = 0.0;
  bool monotone = true;
};

CriticalVelocity critical_velocity(const DynamicsParams& params,
                                   const RiderGeometry& geom,
                                   const std::vector<AngleInterval>& gaps,
                                   double dt_max_off, int phase_grid = 16);

// Required desired speed at stimulation switch-off so the crank coasts
// through the gap: q_dot_crit plus the worst tracking-error contribution.
double min_offswitch_speed_from_zoff(double q_dot_crit, double alpha,
                                     double z_off);
double min_offswitch_speed(double q_dot_crit, double alpha,
                           const LyapunovWeights& w, double gamma, double z_on,
                           double dt_min_on);

// Fixed point of one decay-then-growth cycle: the energy level d_bar that
// reproduces itself, the post-decay level d_lower, and the error-norm radius
// d_radius = sqrt(d_bar/lambda1).
struct UltimateBound {
  double d_bar = 0.0;
  double d_lower = 0.0;
  double d_radius = 0.0;
  double residual = 0.0;  // defect of the quadratic b1*d + b2*sqrt(d) + b3 at d_bar
};

UltimateBound ultimate_bound(double gamma, const LyapunovWeights& w,
                             const GrowthConstants& g, double dt_min_on,
                             double dt_max_off);

// One certified inequality with its margin (positive margin = satisfied
// strictly).
struct CertificateCheck {
  std::string name;
  double required = 0.0;
  double actual = 0.0;
  double margin = 0.0;
  bool pass = false;
};

struct Certificate {
  PropertyConstants properties;
  RegionMap regions;
  double epsilon = 0.0;
  double transfer_peak = 0.0;
  double region_length_min = 0.0;
  ChiBound natural;    // globally valid collection
  ChiBound certified;  // domain-restricted constants the gains must dominate
  LyapunovWeights weights;
  double gamma = 0.0;
  GrowthConstants growth;
  double dt_min_on = 0.0;
  double dt_max_off = 0.0;
  double q_dot_crit = 0.0;
  bool q_dot_crit_monotone = true;
  double min_offswitch = 0.0;
  double z_reference = 0.0;
  double z_domain = 0.0;
  UltimateBound ultimate;
  std::vector<GainCheck> gain_checks;
  std::vector<CertificateCheck> checks;
  bool certified_ok = false;
};

// Full pipeline: model bounds -> chi collection -> domain-restricted
// re-collection search -> gain conditions -> decay rate -> growth constants
// -> critical velocity -> dwell-time budgets -> ultimate bound, with every
// inequality recorded as a check.  Never throws for a merely uncertifiable
// scenario; structural errors (geometry, domains) propagate.
Certificate certify_scenario(const Scenario& scenario);

// Deterministic plain-text report of the certificate.
std::string render_certificate(const Certificate& cert);

// Gain vector satisfying every certificate inequality for the scenario's
// model and trajectory, with the given relative headroom on each condition.
ControllerGains suggest_certified_gains(const Scenario& scenario,
                                        double headroom);

}  // namespace fescycle
