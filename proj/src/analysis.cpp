#include "fescycle/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <limits>
#include <random>
#include <sstream>
#include <vector>

#include "fescycle/errors.hpp"

namespace fescycle {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;
// Tangent arguments this close to pi/2 count as escaped.
constexpr double kEscapeMargin = 1e-9;
constexpr double kBallisticStep = 1e-4;
constexpr double kSpeedFloor = 1e-3;
constexpr double kSpeedCeiling = 50.0;
constexpr double kSpeedTol = 1e-6;

double sq(double x) { return x * x; }

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double tan_argument(const GrowthConstants& g, double scaled_off, double dt) {
  return 0.25 * g.a3 * dt +
         std::atan((2.0 * g.a1 * scaled_off + g.a2) / g.a3);
}

}  // namespace

RegionMap scenario_regions(const Scenario& scenario) {
  return stimulation_regions(scenario.geometry, scenario.gains.epsilon);
}

void validate_scenario(const Scenario& s) {
  try {
    validate_geometry(s.geometry);
  } catch (const Error& e) {
    throw ConfigError(std::string("geometry: ") + e.what());
  }
  if (!(s.step_size >= 1e-6 && s.step_size <= 1e-2))
    throw ConfigError("step_size must lie in [1e-6, 1e-2] s");
  if (s.duration <= 0.0 && s.max_revolutions <= 0.0)
    throw ConfigError("a stopping rule is required: duration or max_revolutions");
  if (s.gains.alpha <= 0.0) throw ConfigError("gains.alpha must be positive");
  if (s.trajectory.cadence_target <= 0.0)
    throw ConfigError("trajectory.cadence_target must be positive");
  if (s.trajectory.ramp_rate < 0.0)
    throw ConfigError("trajectory.ramp_rate must be nonnegative");
  if (s.analysis.speed_domain <= 0.0)
    throw ConfigError("analysis.speed_domain must be positive");
  if (s.analysis.dt_max_off <= 0.0)
    throw ConfigError("analysis.dt_max_off must be positive");
  RegionMap regions;
  try {
    regions = stimulation_regions(s.geometry, s.gains.epsilon);
  } catch (const Error& e) {
    throw ConfigError(std::string("epsilon: ") + e.what());
  }
  if (regions.tag_at(s.initial.angle) == RegionTag::Uncontrolled)
    throw ConfigError(
        "initial crank angle must start inside a stimulation region");
}

LyapunovWeights lyapunov_weights(double inertia_min, double inertia_max) {
  if (!(0.0 < inertia_min && inertia_min <= inertia_max))
    throw ValidationFailure("inertia bounds must satisfy 0 < min <= max");
  return {std::min(0.5, 0.5 * inertia_min), std::max(0.5, 0.5 * inertia_max)};
}

double error_energy(double inertia, double e1, double e2) {
  return 0.5 * (e1 * e1 + inertia * e2 * e2);
}

// Worst-case collection of |chi| by powers of ||z||.  With Q1 = sup|desired
// speed| and Q2 = sup|desired accel|, the elementary bounds
//   |e1|, |e2| <= ||z||,   |e1_dot| <= (1+alpha)||z||,
//   |qdot| <= Q1 + (1+alpha)||z||,   |qdot_d + alpha*e1| <= Q1 + alpha*||z||,
//   |qddot_d + alpha*e1_dot| <= Q2 + alpha*(1+alpha)*||z||
// turn the term-by-term model bounds into
//   c1 = cM*Q2 + cV*Q1^2 + cG + cd + cP1 + (c + cP2)*Q1
//   c2 = cM*alpha*(1+alpha) + cV*Q1*(1+2*alpha) + (c + cP2)*(1+alpha)
//   c3 = cV*alpha*(1+alpha).
ChiBound chi_bound_collection(const PropertyConstants& props,
                              const TrajectorySpec& traj, double alpha) {
  if (alpha <= 0.0) throw ValidationFailure("alpha must be positive");
  const double speed_sup = traj.cadence_target;
  const double accel_sup =
      traj.ramp_rate == 0.0 ? 0.0 : traj.cadence_target * traj.ramp_rate;
  const double friction = props.damping_coeff + props.passive_slope;
  ChiBound b;
  b.c1 = props.inertia_max * accel_sup + props.coriolis_coeff * sq(speed_sup) +
         props.gravity_max + props.disturbance_max + props.passive_const +
         friction * speed_sup;
  b.c2 = props.inertia_max * alpha * (1.0 + alpha) +
         props.coriolis_coeff * speed_sup * (1.0 + 2.0 * alpha) +
         friction * (1.0 + alpha);
  b.c3 = props.coriolis_coeff * alpha * (1.0 + alpha);
  b.z_domain = 0.0;
  return b;
}

double chi_value(const DynamicsParams& params, const RiderGeometry& geom,
                 const TrajectorySpec& traj, double alpha, double t, double e1,
                 double e2) {
  const DesiredState des = desired_trajectory(traj, t);
  const double e1_dot = e2 - alpha * e1;
  const double q = des.angle - e1;
  const double qdot = des.speed - e1_dot;
  const DriveTerms terms = drive_terms(params, geom, q);
  return terms.inertia * (des.accel + alpha * e1_dot) +
         0.5 * terms.inertia_gradient * qdot * (des.speed + alpha * e1) +
         terms.gravity + disturbance(params, t) + params.crank_damping * qdot +
         params.passive_tanh * std::tanh(4.0 * qdot) +
         params.passive_linear * qdot;
}

int count_chi_violations(const DynamicsParams& params,
                         const RiderGeometry& geom, const TrajectorySpec& traj,
                         double alpha, const ChiBound& bound, double z_max,
                         int samples, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> radius(0.0, z_max);
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  std::uniform_real_distribution<double> time(0.0, 200.0);
  int bad = 0;
  for (int i = 0; i < samples; ++i) {
    const double z = radius(rng);
    const double ph = phase(rng);
    const double e1 = z * std::cos(ph);
    const double e2 = z * std::sin(ph);
    const double t = time(rng);
    const double chi = chi_value(params, geom, traj, alpha, t, e1, e2);
    const double cap = bound.c1 + bound.c2 * z + bound.c3 * z * z;
    if (std::abs(chi) > cap * (1.0 + 1e-12)) ++bad;
  }
  return bad;
}

ChiBound chi_bound_constants(const PropertyConstants& props,
                             const DynamicsParams& params,
                             const RiderGeometry& geom,
                             const TrajectorySpec& traj, double alpha,
                             double z_max) {
  const ChiBound b = chi_bound_collection(props, traj, alpha);
  if (z_max <= 0.0)
    throw ValidationFailure("sampling domain for the chi bound must be positive");
  if (count_chi_violations(params, geom, traj, alpha, b, z_max, 100000,
                           77310217u) != 0)
    throw ValidationFailure("sampled chi exceeds the collected bound");
  return b;
}

ChiBound tighten_chi_bound(const ChiBound& global_bound, double c2, double c3,
                           double z_cap) {
  if (global_bound.z_domain != 0.0)
    throw ValidationFailure("tightening requires a globally valid bound");
  if (z_cap <= 0.0 || c2 < 0.0 || c3 < 0.0)
    throw ValidationFailure("tightened coefficients and domain must be nonnegative");
  // Minimal constant term dominating the deficit quadratic
  // g(z) = c1g + (c2g - c2)z + (c3g - c3)z^2 on [0, z_cap].
  const double lin = global_bound.c2 - c2;
  const double quad = global_bound.c3 - c3;
  double c1 = std::max(global_bound.c1,
                       global_bound.c1 + lin * z_cap + quad * sq(z_cap));
  if (quad < 0.0) {
    const double vertex = -lin / (2.0 * quad);
    if (vertex > 0.0 && vertex < z_cap)
      c1 = std::max(c1, global_bound.c1 + lin * vertex + quad * sq(vertex));
  }
  return {c1, c2, c3, z_cap};
}

double decay_rate(double alpha, double k1, double epsilon, double gain_min) {
  if (epsilon <= 0.0 || gain_min <= 0.0)
    throw GainConditionViolated(
        "epsilon and the muscle-gain floor must be positive");
  if (alpha <= 0.5) throw GainConditionViolated("alpha must exceed 1/2");
  const double pumped = epsilon * gain_min * k1;
  if (pumped <= 0.5)
    throw GainConditionViolated("k1 must exceed 1/(2*epsilon*gain_min)");
  return std::min(alpha - 0.5, pumped - 0.5);
}

std::vector<GainCheck> verify_gain_conditions(const ControllerGains& gains,
                                              const ChiBound& bound,
                                              double gain_min) {
  const double lever = gains.epsilon * gain_min;
  std::vector<GainCheck> checks;
  const auto add = [&](const std::string& name, double required, double actual,
                       bool strict) {
    GainCheck c{name, required, actual, actual - required, false};
    c.pass = strict ? actual > required : actual >= required;
    checks.push_back(c);
  };
  add("alpha > 1/2", 0.5, gains.alpha, true);
  add("k1 > 1/(2*epsilon*gain_min)", lever > 0.0 ? 0.5 / lever
                                                 : std::numeric_limits<double>::infinity(),
      gains.k1, true);
  add("k2 >= c1/(epsilon*gain_min)", lever > 0.0 ? bound.c1 / lever
                                                 : std::numeric_limits<double>::infinity(),
      gains.k2, false);
  add("k3 >= c2/(epsilon*gain_min)", lever > 0.0 ? bound.c2 / lever
                                                 : std::numeric_limits<double>::infinity(),
      gains.k3, false);
  add("k4 >= c3/(epsilon*gain_min)", lever > 0.0 ? bound.c3 / lever
                                                 : std::numeric_limits<double>::infinity(),
      gains.k4, false);
  return checks;
}

bool all_pass(const std::vector<GainCheck>& checks) {
  return std::all_of(checks.begin(), checks.end(),
                     [](const GainCheck& c) { return c.pass; });
}

std::string render_gain_report(const std::vector<GainCheck>& checks) {
  std::ostringstream out;
  out << "gain conditions\n";
  for (const GainCheck& c : checks) {
    out << "  [" << (c.pass ? "PASS" : "FAIL") << "] " << c.name
        << ": required=" << fmt(c.required) << " actual=" << fmt(c.actual)
        << " margin=" << fmt(c.margin) << "\n";
  }
  return out.str();
}

double decay_envelope(double z_on, double gamma, const LyapunovWeights& w,
                      double dt) {
  return std::sqrt(w.upper / w.lower) * z_on *
         std::exp(-gamma * dt / (2.0 * w.upper));
}

double decay_envelope_energy(double v_on, double gamma, double lambda2,
                             double dt) {
  return v_on * std::exp(-gamma * dt / lambda2);
}

GrowthConstants growth_constants(const ChiBound& bound, double lambda1) {
  if (lambda1 <= 0.0) throw ValidationFailure("lambda1 must be positive");
  GrowthConstants g;
  g.a1 = bound.c3 / std::pow(lambda1, 1.5);
  g.a2 = (bound.c2 + 0.5) / lambda1;
  g.a3 = 4.0 * g.a1 * bound.c1 / std::sqrt(lambda1) - sq(g.a2);
  if (g.a3 <= 0.0)
    throw NegativeA3(
        "growth constant a3 is nonpositive; the tangent-form envelope is "
        "undefined for these coefficients");
  return g;
}

double growth_envelope(double z_off, const GrowthConstants& g,
                       const LyapunovWeights& w, double dt) {
  const double arg = tan_argument(g, std::sqrt(w.upper) * z_off, dt);
  if (arg >= 0.5 * kPi - kEscapeMargin)
    throw EscapeTimeExceeded("growth envelope escaped before the requested time");
  return (g.a3 * std::tan(arg) - g.a2) / (2.0 * g.a1 * std::sqrt(w.lower));
}

double growth_envelope_energy(double v_off, const GrowthConstants& g,
                              double dt) {
  if (v_off < 0.0) throw ValidationFailure("energy must be nonnegative");
  const double arg = tan_argument(g, std::sqrt(v_off), dt);
  if (arg >= 0.5 * kPi - kEscapeMargin)
    throw EscapeTimeExceeded("growth envelope escaped before the requested time");
  return sq(g.a3 * std::tan(arg) - g.a2) / (4.0 * sq(g.a1));
}

double rdt_max_offtime(double z_off, const GrowthConstants& g, double lambda2) {
  return (kTwoPi -
          4.0 * std::atan((2.0 * g.a1 * std::sqrt(lambda2) * z_off + g.a2) /
                          g.a3)) /
         g.a3;
}

double min_ontime_bound(double region_length, double max_desired_speed,
                        double alpha, const LyapunovWeights& w, double z_on) {
  if (region_length <= 0.0)
    throw ValidationFailure("region length must be positive");
  const double denom =
      max_desired_speed + (1.0 + alpha) * std::sqrt(w.upper / w.lower) * z_on;
  if (denom <= 0.0) throw ValidationFailure("traversal speed bound must be positive");
  return region_length / denom;
}

double max_speed_for_ontime(double region_length, double dt_required,
                            double alpha, const LyapunovWeights& w,
                            double z_on) {
  if (region_length <= 0.0 || dt_required <= 0.0)
    throw ValidationFailure("region length and required time must be positive");
  const double speed = region_length / dt_required -
                       (1.0 + alpha) * std::sqrt(w.upper / w.lower) * z_on;
  if (speed <= 0.0)
    throw InfeasibleTrajectory(
        "no positive desired speed satisfies the on-time requirement");
  return speed;
}

namespace {

// Time for ballistic (zero-input) motion to traverse [entry, entry+length]
// starting at the given speed; +inf if the budget elapses first.
double gap_crossing_time(const DynamicsParams& params,
                         const RiderGeometry& geom, double entry,
                         double length, double speed, double budget) {
  const double exit = entry + length;
  const auto accel = [&](double q, double qd, double t) {
    const DriveTerms d = drive_terms(params, geom, q);
    return (-0.5 * d.inertia_gradient * qd * qd - d.gravity -
            disturbance(params, t) - params.crank_damping * qd -
            params.passive_tanh * std::tanh(4.0 * qd) -
            params.passive_linear * qd) /
           d.inertia;
  };
  double q = entry, qd = speed, t = 0.0;
  const double h = kBallisticStep;
  while (t <= budget) {
    const double k1q = qd, k1v = accel(q, qd, t);
    const double k2q = qd + 0.5 * h * k1v,
                 k2v = accel(q + 0.5 * h * k1q, qd + 0.5 * h * k1v, t + 0.5 * h);
    const double k3q = qd + 0.5 * h * k2v,
                 k3v = accel(q + 0.5 * h * k2q, qd + 0.5 * h * k2v, t + 0.5 * h);
    const double k4q = qd + h * k3v,
                 k4v = accel(q + h * k3q, qd + h * k3v, t + h);
    const double q_next = q + (h / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
    const double qd_next = qd + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    if (q_next >= exit) {
      const double frac = (exit - q) / (q_next - q);
      const double crossing = t + h * frac;
      return crossing <= budget ? crossing
                                : std::numeric_limits<double>::infinity();
    }
    q = q_next;
    qd = qd_next;
    t += h;
  }
  return std::numeric_limits<double>::infinity();
}

struct LeastSpeedResult {
  double value = 0.0;
  bool monotone = true;
};

LeastSpeedResult least_crossing_speed(const DynamicsParams& params,
                                      const RiderGeometry& geom, double entry,
                                      double length, double budget) {
  const auto crosses = [&](double w) {
    return gap_crossing_time(params, geom, entry, length, w, budget) <= budget;
  };
  LeastSpeedResult out;
  if (!crosses(kSpeedCeiling))
    throw NoCrossing("no entry speed up to 50 rad/s traverses the gap in time");
  if (crosses(kSpeedFloor)) {
    out.value = kSpeedFloor;
    return out;
  }
  const int probes = 33;
  std::vector<char> ok(probes);
  for (int i = 0; i < probes; ++i) {
    const double w =
        kSpeedFloor + (kSpeedCeiling - kSpeedFloor) * i / (probes - 1.0);
    ok[i] = crosses(w) ? 1 : 0;
  }
  int transitions = 0;
  for (int i = 0; i + 1 < probes; ++i)
    if (ok[i] != ok[i + 1]) ++transitions;
  double lo = kSpeedFloor, hi = kSpeedCeiling;
  if (transitions == 1) {
    for (int i = 0; i + 1 < probes; ++i) {
      if (!ok[i] && ok[i + 1]) {
        lo = kSpeedFloor + (kSpeedCeiling - kSpeedFloor) * i / (probes - 1.0);
        hi = kSpeedFloor +
             (kSpeedCeiling - kSpeedFloor) * (i + 1) / (probes - 1.0);
        break;
      }
    }
  } else {
    // Crossing behaviour is not monotone on the probe grid; take the upper
    // edge of the last failing stretch on a fine scan so everything above the
    // result verifiably crosses.
    out.monotone = false;
    const int n = 4096;
    int last_false = -1;
    for (int i = 0; i < n; ++i) {
      const double w = kSpeedFloor + (kSpeedCeiling - kSpeedFloor) * i / (n - 1.0);
      if (!crosses(w)) last_false = i;
    }
    if (last_false < 0) {
      out.value = kSpeedFloor;
      return out;
    }
    lo = kSpeedFloor + (kSpeedCeiling - kSpeedFloor) * last_false / (n - 1.0);
    hi = std::min(kSpeedCeiling,
                  kSpeedFloor +
                      (kSpeedCeiling - kSpeedFloor) * (last_false + 1) / (n - 1.0));
  }
  while (hi - lo > kSpeedTol) {
    const double mid = 0.5 * (lo + hi);
    (crosses(mid) ? hi : lo) = mid;
  }
  out.value = hi;
  return out;
}

}  // namespace

CriticalVelocity critical_velocity(const DynamicsParams& params,
                                   const RiderGeometry& geom,
                                   const std::vector<AngleInterval>& gaps,
                                   double dt_max_off, int phase_grid) {
  if (dt_max_off <= 0.0)
    throw ValidationFailure("uncontrolled-time budget must be positive");
  if (gaps.empty())
    throw ValidationFailure("at least one uncontrolled interval is required");
  if (phase_grid < 1) phase_grid = 1;

  std::vector<std::future<LeastSpeedResult>> jobs;
  for (const AngleInterval& gap : gaps) {
    for (int k = 0; k < phase_grid; ++k) {
      DynamicsParams shifted = params;
      shifted.disturbance_phase += kTwoPi * k / phase_grid;
      jobs.push_back(std::async(std::launch::async, [shifted, geom, gap,
                                                     dt_max_off] {
        return least_crossing_speed(shifted, geom, gap.lo, gap.measure(),
                                    dt_max_off);
      }));
    }
  }
  CriticalVelocity worst;
  for (auto& job : jobs) {
    const LeastSpeedResult r = job.get();
    worst.value = std::max(worst.value, r.value);
    worst.monotone = worst.monotone && r.monotone;
  }
  return worst;
}

double min_offswitch_speed_from_zoff(double q_dot_crit, double alpha,
                                     double z_off) {
  return q_dot_crit + (1.0 + alpha) * z_off;
}

double min_offswitch_speed(double q_dot_crit, double alpha,
                           const LyapunovWeights& w, double gamma, double z_on,
                           double dt_min_on) {
  return q_dot_crit + (1.0 + alpha) * std::sqrt(w.upper / w.lower) * z_on *
                          std::exp(-gamma * dt_min_on / (2.0 * w.upper));
}

UltimateBound ultimate_bound(double gamma, const LyapunovWeights& w,
                             const GrowthConstants& g, double dt_min_on,
                             double dt_max_off) {
  if (dt_min_on <= 0.0 || dt_max_off <= 0.0)
    throw ValidationFailure("dwell-time budgets must be positive");
  if (0.25 * g.a3 * dt_max_off >= 0.5 * kPi - kEscapeMargin)
    throw EscapeTimeExceeded(
        "off-time budget reaches the growth envelope's escape time");
  const double T = std::tan(0.25 * g.a3 * dt_max_off);
  const double E = std::exp(-gamma * dt_min_on / (2.0 * w.upper));
  const double b1 = -4.0 * sq(g.a1) * T * E;
  const double b2 = 2.0 * g.a1 * g.a3 * (1.0 - E) -
                    2.0 * g.a1 * g.a2 * T * (1.0 + E);
  const double b3 = -(sq(g.a2) + sq(g.a3)) * T;
  for (double b : {b1, b2, b3}) {
    if (std::abs(b) < 1e-14)
      throw DegenerateCoefficient("fixed-point quadratic has a vanishing coefficient");
  }
  const double disc = sq(b2) - 4.0 * b1 * b3;
  if (disc < 0.0)
    throw ComplexRoot("fixed-point quadratic has no real root");
  // (-b2 + sqrt(disc))/(2*b1) evaluated without the subtractive cancellation
  // that b2 > 0 invites.
  const double y = b2 > 0.0 ? -2.0 * b3 / (b2 + std::sqrt(disc))
                            : (-b2 + std::sqrt(disc)) / (2.0 * b1);
  UltimateBound out;
  out.d_bar = sq(y);
  out.d_lower = out.d_bar * sq(E);
  out.d_radius = std::sqrt(out.d_bar / w.lower);
  out.residual = b1 * out.d_bar + b2 * y + b3;
  return out;
}

namespace {

struct RebalanceOutcome {
  bool feasible = false;
  ChiBound bound;
  GrowthConstants growth;
  UltimateBound ultimate;
};

// Searches domain-restricted (c2, c3) re-collections for one that keeps the
// whole downstream chain alive, minimizing the fixed-point energy d_bar.
// Caps, when positive, restrict the constants the gains can dominate; they
// are shrunk a hair so the resulting gain margins never sit on a float
// equality.
RebalanceOutcome search_certified_chi(const ChiBound& natural, double z_dom,
                                      const LyapunovWeights& w, double gamma,
                                      double dt_min_on, double dt_max_off,
                                      double z_ref, double c1_cap,
                                      double c2_cap, double c3_cap) {
  RebalanceOutcome best;
  double best_score = std::numeric_limits<double>::infinity();

  // The candidate grid is always anchored at the natural collection so capped
  // and uncapped searches walk the same points; caps only filter.
  const double shrink = 1.0 - 1e-9;
  if (c1_cap > 0.0) c1_cap *= shrink;
  if (c2_cap > 0.0) c2_cap *= shrink;
  if (c3_cap > 0.0) c3_cap *= shrink;
  const double c2_hi = std::max(natural.c2, 1.0);
  const double c3_hi = std::max(natural.c3, 50.0);
  const int steps = 40;
  std::vector<double> c2s, c3s;
  for (int i = 0; i < steps; ++i) {
    c2s.push_back(c2_hi * std::pow(10.0, -5.0 * i / (steps - 1.0)));
    c3s.push_back(c3_hi * std::pow(10.0, -7.0 * i / (steps - 1.0)));
  }

  const double z_off_ref = decay_envelope(z_ref, gamma, w, dt_min_on);
  for (double c2 : c2s) {
    if (c2_cap > 0.0 && c2 > c2_cap) continue;
    for (double c3 : c3s) {
      if (c3_cap > 0.0 && c3 > c3_cap) continue;
      const ChiBound cand = tighten_chi_bound(natural, c2, c3, z_dom);
      if (c1_cap > 0.0 && cand.c1 > c1_cap) continue;
      GrowthConstants g;
      g.a1 = cand.c3 / std::pow(w.lower, 1.5);
      g.a2 = (cand.c2 + 0.5) / w.lower;
      g.a3 = 4.0 * g.a1 * cand.c1 / std::sqrt(w.lower) - sq(g.a2);
      // a3 >= 1 keeps the tangent-form curve a true majorant of the
      // comparison inequality in this convention.
      if (g.a3 < 1.0) continue;
      if (0.25 * g.a3 * dt_max_off >= 0.5 * kPi - 1e-6) continue;
      if (rdt_max_offtime(z_off_ref, g, w.upper) <= dt_max_off) continue;
      UltimateBound ub;
      try {
        ub = ultimate_bound(gamma, w, g, dt_min_on, dt_max_off);
      } catch (const Error&) {
        continue;
      }
      if (!(ub.d_bar > 0.0) || !std::isfinite(ub.d_bar)) continue;
      // The cycle must stay repeatable from the fixed point itself: the
      // growth phase starting at the post-decay energy keeps its dwell
      // budget ahead of the escape time.
      const double z_off_fixed = std::sqrt(ub.d_lower / w.upper);
      if (rdt_max_offtime(z_off_fixed, g, w.upper) <= dt_max_off) continue;
      if (ub.d_bar < best_score) {
        best_score = ub.d_bar;
        best.feasible = true;
        best.bound = cand;
        best.growth = g;
        best.ultimate = ub;
      }
    }
  }
  return best;
}

double initial_error_norm(const Scenario& s) {
  const DesiredState des = desired_trajectory(s.trajectory, 0.0);
  const ErrorState err = tracking_errors(des, s.initial, s.gains.alpha);
  return err.norm_z();
}

double smallest_region_length(const RegionMap& regions) {
  double len = std::numeric_limits<double>::infinity();
  for (const RegionTag tag : {RegionTag::RightStim, RegionTag::LeftStim}) {
    for (const AngleInterval& iv : regions.intervals(tag))
      len = std::min(len, iv.measure());
  }
  if (!std::isfinite(len))
    throw ValidationFailure("no stimulation region exists");
  return len;
}

}  // namespace

Certificate certify_scenario(const Scenario& scenario) {
  validate_scenario(scenario);
  Certificate cert;
  cert.epsilon = scenario.gains.epsilon;
  cert.regions = scenario_regions(scenario);
  cert.properties = property_constants(scenario.dynamics, scenario.geometry,
                                       scenario.analysis.speed_domain);
  cert.transfer_peak = cert.properties.transfer_max;
  cert.region_length_min = smallest_region_length(cert.regions);
  cert.weights =
      lyapunov_weights(cert.properties.inertia_min, cert.properties.inertia_max);
  cert.z_reference = scenario.analysis.z_reference;
  cert.z_domain = scenario.analysis.z_domain > 0.0
                      ? scenario.analysis.z_domain
                      : 2.0 * std::sqrt(cert.weights.upper / cert.weights.lower) *
                                initial_error_norm(scenario) +
                            1.0;
  cert.natural = chi_bound_constants(cert.properties, scenario.dynamics,
                                     scenario.geometry, scenario.trajectory,
                                     scenario.gains.alpha, cert.z_domain);
  cert.dt_max_off = scenario.analysis.dt_max_off;

  const double gain_min = cert.properties.gain_min;
  const double lever = scenario.gains.epsilon * gain_min;

  const CriticalVelocity crit = critical_velocity(
      scenario.dynamics, scenario.geometry,
      cert.regions.intervals(RegionTag::Uncontrolled), cert.dt_max_off);
  cert.q_dot_crit = crit.value;
  cert.q_dot_crit_monotone = crit.monotone;

  const auto add_check = [&](const std::string& name, double required,
                             double actual, bool strict) {
    CertificateCheck c{name, required, actual, actual - required, false};
    c.pass = strict ? actual > required : actual >= required;
    cert.checks.push_back(c);
  };

  cert.dt_min_on =
      min_ontime_bound(cert.region_length_min, scenario.trajectory.cadence_target,
                       scenario.gains.alpha, cert.weights, cert.z_reference);

  const bool decay_ok = scenario.gains.alpha > 0.5 &&
                        lever > 0.0 &&
                        scenario.gains.k1 > 0.5 / lever;
  if (!decay_ok) {
    cert.certified = cert.natural;
    cert.gain_checks =
        verify_gain_conditions(scenario.gains, cert.certified, gain_min);
    cert.certified_ok = false;
    return cert;
  }

  cert.gamma = decay_rate(scenario.gains.alpha, scenario.gains.k1,
                          scenario.gains.epsilon, gain_min);

  const RebalanceOutcome found = search_certified_chi(
      cert.natural, cert.z_domain, cert.weights, cert.gamma, cert.dt_min_on,
      cert.dt_max_off, cert.z_reference, scenario.gains.k2 * lever,
      scenario.gains.k3 * lever, scenario.gains.k4 * lever);

  cert.certified = found.feasible ? found.bound : cert.natural;
  cert.gain_checks =
      verify_gain_conditions(scenario.gains, cert.certified, gain_min);

  cert.min_offswitch =
      min_offswitch_speed(cert.q_dot_crit, scenario.gains.alpha, cert.weights,
                          cert.gamma, cert.z_reference, cert.dt_min_on);
  add_check("certified chi re-collection found", 1.0, found.feasible ? 1.0 : 0.0,
            false);
  add_check("cadence target >= required off-switch desired speed",
            cert.min_offswitch, scenario.trajectory.cadence_target, false);

  if (found.feasible) {
    cert.growth = found.growth;
    cert.ultimate = found.ultimate;
    add_check("growth soundness a3 >= 1", 1.0, cert.growth.a3, false);
    add_check("escape margin: pi/2 - (a3/4)*dt_max_off > 0", 0.0,
              0.5 * kPi - 0.25 * cert.growth.a3 * cert.dt_max_off, true);
    const double z_off_ref =
        decay_envelope(cert.z_reference, cert.gamma, cert.weights, cert.dt_min_on);
    add_check("rdt budget at reference exit error", cert.dt_max_off,
              rdt_max_offtime(z_off_ref, cert.growth, cert.weights.upper), true);
    const double z_off_fixed =
        std::sqrt(cert.ultimate.d_lower / cert.weights.upper);
    add_check("rdt budget at the fixed-point exit energy", cert.dt_max_off,
              rdt_max_offtime(z_off_fixed, cert.growth, cert.weights.upper),
              true);
    add_check("fixed-point residual within 1e-10", 0.0,
              1e-10 - std::abs(cert.ultimate.residual), false);
  }

  cert.certified_ok =
      all_pass(cert.gain_checks) &&
      std::all_of(cert.checks.begin(), cert.checks.end(),
                  [](const CertificateCheck& c) { return c.pass; });
  return cert;
}

std::string render_certificate(const Certificate& cert) {
  std::ostringstream out;
  out << "stimulation certification report\n";
  out << "================================\n";
  out << "model bounds (speed domain " << fmt(cert.properties.speed_domain)
      << " rad/s)\n";
  out << "  inertia_min = " << fmt(cert.properties.inertia_min) << "\n";
  out << "  inertia_max = " << fmt(cert.properties.inertia_max) << "\n";
  out << "  coriolis_coeff = " << fmt(cert.properties.coriolis_coeff) << "\n";
  out << "  gravity_max = " << fmt(cert.properties.gravity_max) << "\n";
  out << "  disturbance_max = " << fmt(cert.properties.disturbance_max) << "\n";
  out << "  transfer_peak = " << fmt(cert.transfer_peak) << "\n";
  out << "  passive = " << fmt(cert.properties.passive_const) << " + "
      << fmt(cert.properties.passive_slope) << "*|qdot|\n";
  out << "  damping_coeff = " << fmt(cert.properties.damping_coeff) << "\n";
  out << "  muscle_gain in [" << fmt(cert.properties.gain_min) << ", "
      << fmt(cert.properties.gain_max) << "]\n";
  out << "regions (epsilon = " << fmt(cert.epsilon) << ")\n";
  const auto tag_name = [](RegionTag t) {
    switch (t) {
      case RegionTag::RightStim: return "right";
      case RegionTag::LeftStim: return "left";
      default: return "uncontrolled";
    }
  };
  for (const RegionTag tag :
       {RegionTag::RightStim, RegionTag::LeftStim, RegionTag::Uncontrolled}) {
    for (const AngleInterval& iv : cert.regions.intervals(tag)) {
      out << "  " << tag_name(tag) << " [" << fmt(iv.lo) << ", " << fmt(iv.hi)
          << ") length " << fmt(iv.measure()) << "\n";
    }
  }
  out << "  controlled_measure = "
      << fmt(cert.regions.measure(RegionTag::RightStim) +
             cert.regions.measure(RegionTag::LeftStim))
      << "\n";
  out << "  smallest_region_length = " << fmt(cert.region_length_min) << "\n";
  out << "energy weights: lower = " << fmt(cert.weights.lower)
      << ", upper = " << fmt(cert.weights.upper) << "\n";
  out << "chi bound (global): c1 = " << fmt(cert.natural.c1)
      << ", c2 = " << fmt(cert.natural.c2) << ", c3 = " << fmt(cert.natural.c3)
      << "\n";
  out << "chi bound (certified, |z| <= " << fmt(cert.certified.z_domain)
      << "): c1 = " << fmt(cert.certified.c1) << ", c2 = "
      << fmt(cert.certified.c2) << ", c3 = " << fmt(cert.certified.c3) << "\n";
  out << "decay rate gamma = " << fmt(cert.gamma) << "\n";
  out << "growth constants: a1 = " << fmt(cert.growth.a1)
      << ", a2 = " << fmt(cert.growth.a2) << ", a3 = " << fmt(cert.growth.a3)
      << "\n";
  out << "dwell budgets: dt_min_on = " << fmt(cert.dt_min_on)
      << " s, dt_max_off = " << fmt(cert.dt_max_off)
      << " s, z_reference = " << fmt(cert.z_reference) << "\n";
  out << "critical velocity = " << fmt(cert.q_dot_crit)
      << " rad/s (monotone probe: "
      << (cert.q_dot_crit_monotone ? "yes" : "no") << ")\n";
  out << "required off-switch desired speed = " << fmt(cert.min_offswitch)
      << " rad/s\n";
  out << "ultimate bound: d_bar = " << fmt(cert.ultimate.d_bar)
      << ", d_lower = " << fmt(cert.ultimate.d_lower)
      << ", d_radius = " << fmt(cert.ultimate.d_radius)
      << ", residual = " << fmt(cert.ultimate.residual) << "\n";
  out << render_gain_report(cert.gain_checks);
  out << "checks\n";
  for (const CertificateCheck& c : cert.checks) {
    out << "  [" << (c.pass ? "PASS" : "FAIL") << "] " << c.name
        << ": required=" << fmt(c.required) << " actual=" << fmt(c.actual)
        << " margin=" << fmt(c.margin) << "\n";
  }
  out << "result: " << (cert.certified_ok ? "CERTIFIED" : "NOT CERTIFIED")
      << "\n";
  return out.str();
}

ControllerGains suggest_certified_gains(const Scenario& scenario,
                                        double headroom) {
  if (headroom < 1.0)
    throw ValidationFailure("headroom must be at least 1");
  validate_scenario(scenario);
  const PropertyConstants props = property_constants(
      scenario.dynamics, scenario.geometry, scenario.analysis.speed_domain);
  const LyapunovWeights w =
      lyapunov_weights(props.inertia_min, props.inertia_max);
  const double lever = scenario.gains.epsilon * props.gain_min;
  if (lever <= 0.0)
    throw ValidationFailure("epsilon and the muscle-gain floor must be positive");

  ControllerGains gains = scenario.gains;
  gains.k1 = headroom * gains.alpha / lever;
  const double gamma =
      decay_rate(gains.alpha, gains.k1, gains.epsilon, props.gain_min);

  const double z_dom = scenario.analysis.z_domain > 0.0
                           ? scenario.analysis.z_domain
                           : 2.0 * std::sqrt(w.upper / w.lower) *
                                     initial_error_norm(scenario) +
                                 1.0;
  const ChiBound natural = chi_bound_constants(
      props, scenario.dynamics, scenario.geometry, scenario.trajectory,
      gains.alpha, z_dom);
  const RegionMap regions = scenario_regions(scenario);
  const double dt_min_on = min_ontime_bound(
      smallest_region_length(regions), scenario.trajectory.cadence_target,
      gains.alpha, w, scenario.analysis.z_reference);

  const RebalanceOutcome found = search_certified_chi(
      natural, z_dom, w, gamma, dt_min_on, scenario.analysis.dt_max_off,
      scenario.analysis.z_reference, 0.0, 0.0, 0.0);
  if (!found.feasible)
    throw InfeasibleTrajectory(
        "no certified re-collection exists for this scenario");
  gains.k2 = headroom * found.bound.c1 / lever;
  gains.k3 = headroom * found.bound.c2 / lever;
  gains.k4 = headroom * found.bound.c3 / lever;
  return gains;
}

}  // namespace fescycle
