#include "fescycle/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <vector>

#include "fescycle/controller.hpp"
#include "fescycle/dynamics.hpp"
#include "fescycle/errors.hpp"

namespace fescycle {
namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kBoundaryTol = 1e-10;  // rad, bracket width at region events
constexpr double kSignTol = 1e-10;      // |e2| at localized sign changes
// Events this close to the step start are step-scale chatter; splitting them
// would stall the integrator on the sliding surface.
constexpr double kChatterFraction = 1e-3;
constexpr double kEscapeNorm = 1e6;
constexpr double kStallLimit = 10.0;
// Anti-hang guard for revolution-limited runs that stop advancing without
// ever meeting the literal stall condition (e.g. oscillating in place).
constexpr double kRevolutionTimeout = 600.0;

struct State {
  double q = 0.0;
  double qd = 0.0;
};

class ClosedLoop {
 public:
  ClosedLoop(const Scenario& s, const RegionMap& regions)
      : s_(s),
        regions_(regions),
        actuated_(s.gains.k1 > 0.0 || s.gains.k2 > 0.0 || s.gains.k3 > 0.0 ||
                  s.gains.k4 > 0.0) {}

  bool actuated() const { return actuated_; }
  const RegionMap& regions() const { return regions_; }

  void deriv(double t, double q, double qd, double& dq, double& dqd) const {
    double u_r = 0.0, u_l = 0.0;
    if (actuated_) {
      const DesiredState des = desired_trajectory(s_.trajectory, t);
      const ErrorState err =
          tracking_errors(des, CrankState{q, qd}, s_.gains.alpha);
      const double v = control_voltage(s_.gains, err);
      const SwitchedInput u = switched_input(regions_, q, v);
      u_r = u.u_right;
      u_l = u.u_left;
    }
    dq = qd;
    dqd = forward_dynamics(s_.dynamics, s_.geometry, CrankState{q, qd}, t, u_r,
                           u_l);
  }

  State step(double t, const State& x, double h) const {
    double k1q, k1v, k2q, k2v, k3q, k3v, k4q, k4v;
    deriv(t, x.q, x.qd, k1q, k1v);
    deriv(t + 0.5 * h, x.q + 0.5 * h * k1q, x.qd + 0.5 * h * k1v, k2q, k2v);
    deriv(t + 0.5 * h, x.q + 0.5 * h * k2q, x.qd + 0.5 * h * k2v, k3q, k3v);
    deriv(t + h, x.q + h * k3q, x.qd + h * k3v, k4q, k4v);
    return {x.q + h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q),
            x.qd + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)};
  }

  double e2_of(double t, const State& x) const {
    const DesiredState des = desired_trajectory(s_.trajectory, t);
    return tracking_errors(des, CrankState{x.q, x.qd}, s_.gains.alpha).e2;
  }

 private:
  const Scenario& s_;
  const RegionMap& regions_;
  bool actuated_;
};

struct Located {
  double frac = 0.0;
  State state;
};

// First state past the region boundary, bracket narrowed to kBoundaryTol in q.
Located locate_region_crossing(const ClosedLoop& loop, double t,
                               const State& x, double h, RegionTag tag0,
                               const State& trial) {
  double lo = 0.0, hi = 1.0;
  State lo_state = x, hi_state = trial;
  for (int i = 0;
       i < 200 && std::abs(hi_state.q - lo_state.q) > kBoundaryTol; ++i) {
    const double mid = 0.5 * (lo + hi);
    const State m = loop.step(t, x, mid * h);
    if (loop.regions().tag_at(m.q) != tag0) {
      hi = mid;
      hi_state = m;
    } else {
      lo = mid;
      lo_state = m;
    }
  }
  return {hi, hi_state};
}

// Bracketing false-position (Illinois) on e2 along the step; near-linear in
// practice, so a handful of iterations reaches kSignTol.
Located locate_sign_change(const ClosedLoop& loop, double t, const State& x,
                           double h, double f_lo, double f_hi,
                           const State& trial) {
  double lo = 0.0, hi = 1.0;
  double flo = f_lo, fhi = f_hi;
  double s = 1.0;
  State found = trial;
  for (int i = 0; i < 80; ++i) {
    s = hi - fhi * (hi - lo) / (fhi - flo);
    if (!(s > lo && s < hi)) s = 0.5 * (lo + hi);
    const State m = loop.step(t, x, s * h);
    const double fm = loop.e2_of(t + s * h, m);
    found = m;
    if (std::abs(fm) < kSignTol) return {s, m};
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = s;
      flo = fm;
      fhi *= 0.5;
    } else {
      hi = s;
      fhi = fm;
      flo *= 0.5;
    }
  }
  return {s, found};
}

enum class EventKind { None, Region, SignChange };

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

SimulationTrace simulate(const Scenario& scenario) {
  validate_scenario(scenario);
  const RegionMap regions = scenario_regions(scenario);
  const ClosedLoop loop(scenario, regions);
  const double h = scenario.step_size;

  SimulationTrace trace;
  if (scenario.duration > 0.0) {
    const auto cap = static_cast<std::size_t>(scenario.duration / h) + 16;
    trace.t.reserve(cap);
  }

  State x{scenario.initial.angle, scenario.initial.speed};
  double t = 0.0;
  const double q_start = x.q;

  SwitchCycle open_cycle;
  bool cycle_open = false;
  int cycle_count = 0;
  double stall_since = -1.0;
  double last_revolution_time = 0.0;
  double revolutions_seen = 0.0;
  RegionTag prev_tag = regions.tag_at(x.q);

  const auto record = [&](double tt, const State& st, EventKind kind) {
    const DesiredState des = desired_trajectory(scenario.trajectory, tt);
    const ErrorState err =
        tracking_errors(des, CrankState{st.q, st.qd}, scenario.gains.alpha);
    const double v = control_voltage(scenario.gains, err);
    const SwitchedInput u = switched_input(regions, st.q, v);
    const RegionTag tag = regions.tag_at(st.q);
    const double vl =
        error_energy(inertia(scenario.dynamics, scenario.geometry, st.q),
                     err.e1, err.e2);

    trace.t.push_back(tt);
    trace.q.push_back(st.q);
    trace.qdot.push_back(st.qd);
    trace.q_des.push_back(des.angle);
    trace.qdot_des.push_back(des.speed);
    trace.e1.push_back(err.e1);
    trace.e1dot.push_back(err.e1_dot);
    trace.e2.push_back(err.e2);
    trace.energy.push_back(vl);
    trace.u_right.push_back(u.u_right);
    trace.u_left.push_back(u.u_left);
    trace.region.push_back(tag);

    const double applied = u.u_right + u.u_left;
    if (scenario.analysis.sat_voltage > 0.0 &&
        std::abs(applied) > scenario.analysis.sat_voltage)
      trace.saturation_events.push_back({tt, applied});

    if (kind == EventKind::Region && tag != prev_tag) {
      if (prev_tag != RegionTag::Uncontrolled && cycle_open) {
        open_cycle.t_off = tt;
        open_cycle.q_off = wrap_angle(st.q);
        open_cycle.z_off = err.norm_z();
        open_cycle.energy_off = vl;
        open_cycle.index = cycle_count++;
        trace.schedule.push_back(open_cycle);
        cycle_open = false;
      }
      if (tag != RegionTag::Uncontrolled) {
        open_cycle = SwitchCycle{};
        open_cycle.t_on = tt;
        open_cycle.q_on = wrap_angle(st.q);
        open_cycle.z_on = err.norm_z();
        open_cycle.energy_on = vl;
        cycle_open = true;
      }
    }
    prev_tag = tag;

    if (err.norm_z() > kEscapeNorm)
      throw EscapeDetected("tracking error norm exceeded 1e6");
    if (tag == RegionTag::Uncontrolled && st.qd <= 0.0) {
      if (stall_since < 0.0)
        stall_since = tt;
      else if (tt - stall_since > kStallLimit)
        throw NonForwardProgress(
            "crank speed stayed nonpositive for over 10 s in the uncontrolled "
            "region");
    } else {
      stall_since = -1.0;
    }
  };

  record(t, x, EventKind::None);

  bool done = false;
  while (!done) {
    double pending = h;
    if (scenario.duration > 0.0)
      pending = std::min(pending, scenario.duration - t);
    if (pending <= 1e-15) break;

    while (pending > 0.0) {
      const State trial = loop.step(t, x, pending);
      double frac = std::numeric_limits<double>::infinity();
      State ev_state;
      EventKind kind = EventKind::None;

      if (loop.actuated()) {
        const RegionTag tag0 = regions.tag_at(x.q);
        if (regions.tag_at(trial.q) != tag0) {
          const Located lr =
              locate_region_crossing(loop, t, x, pending, tag0, trial);
          if (lr.frac * pending >= kChatterFraction * h && lr.frac < frac) {
            frac = lr.frac;
            ev_state = lr.state;
            kind = EventKind::Region;
          }
        }
        const double e2_0 = loop.e2_of(t, x);
        const double e2_1 = loop.e2_of(t + pending, trial);
        if (e2_0 != 0.0 && e2_1 != 0.0 &&
            std::signbit(e2_0) != std::signbit(e2_1)) {
          const double s_lin = e2_0 / (e2_0 - e2_1);
          if (s_lin * pending >= kChatterFraction * h) {
            const Located ls =
                locate_sign_change(loop, t, x, pending, e2_0, e2_1, trial);
            if (ls.frac * pending >= kChatterFraction * h && ls.frac < frac) {
              frac = ls.frac;
              ev_state = ls.state;
              kind = EventKind::SignChange;
            }
          }
        }
      }

      if (kind == EventKind::None) {
        t += pending;
        x = trial;
        record(t, x, EventKind::None);
        pending = 0.0;
      } else {
        const double dt_event = frac * pending;
        t += dt_event;
        x = ev_state;
        record(t, x, kind);
        pending -= dt_event;
        if (pending < 1e-9 * h) pending = 0.0;
      }
    }

    const double progressed = x.q - q_start;
    if (progressed >= (std::floor(revolutions_seen) + 1.0) * kTwoPi) {
      last_revolution_time = t;
    }
    revolutions_seen = progressed / kTwoPi;

    if (scenario.duration > 0.0 && t >= scenario.duration - 1e-12) done = true;
    if (scenario.max_revolutions > 0.0 &&
        progressed >= kTwoPi * scenario.max_revolutions)
      done = true;
    if (!done && scenario.duration <= 0.0 &&
        t - last_revolution_time > kRevolutionTimeout)
      throw NonForwardProgress(
          "no revolution completed within 600 s of the previous one");
  }

  trace.revolutions = (x.q - q_start) / kTwoPi;
  return trace;
}

namespace {

struct Segment {
  std::size_t first = 0;
  std::size_t last_excl = 0;  // first sample of the next segment, or size()
  bool controlled = false;
};

std::vector<Segment> split_segments(const SimulationTrace& trace) {
  std::vector<Segment> segs;
  const std::size_t n = trace.size();
  std::size_t start = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    const bool boundary =
        i == n || (trace.region[i] != RegionTag::Uncontrolled) !=
                      (trace.region[start] != RegionTag::Uncontrolled);
    if (boundary) {
      segs.push_back(
          {start, i, trace.region[start] != RegionTag::Uncontrolled});
      start = i;
    }
  }
  return segs;
}

}  // namespace

BoundReport audit_bounds(const SimulationTrace& trace, const Certificate& cert,
                         const Scenario& scenario) {
  if (trace.size() == 0) throw ValidationFailure("empty trace");
  if (cert.gamma <= 0.0 || cert.growth.a3 <= 0.0)
    throw ValidationFailure(
        "auditing requires a certificate with computed decay and growth "
        "constants");

  BoundReport rep;
  const double lam2 = cert.weights.upper;
  const double alpha = scenario.gains.alpha;
  const double z_dom = cert.z_domain;
  const ChiBound& cb = cert.certified;
  const double chi_max = cb.c1 + cb.c2 * z_dom + cb.c3 * z_dom * z_dom;
  const double v_max = scenario.gains.k1 * z_dom + scenario.gains.k2 +
                       scenario.gains.k3 * z_dom +
                       scenario.gains.k4 * z_dom * z_dom;
  const double speed_sup =
      scenario.trajectory.cadence_target + (1.0 + alpha) * z_dom;
  const double e2_rate =
      (chi_max + cert.properties.coriolis_coeff * speed_sup * z_dom +
       cert.properties.transfer_max * cert.properties.gain_max * v_max) /
      cert.properties.inertia_min;
  rep.sliding_band = scenario.step_size * e2_rate;
  rep.sliding_tolerance =
      0.5 * (cert.properties.inertia_max * rep.sliding_band * rep.sliding_band +
             (rep.sliding_band / alpha) * (rep.sliding_band / alpha));

  const auto add = [&rep](const std::string& name, double required,
                          double actual, bool below, bool strict) {
    BoundCheck c;
    c.name = name;
    c.required = required;
    c.actual = actual;
    c.margin = below ? required - actual : actual - required;
    c.pass = strict ? c.margin > 0.0 : c.margin >= 0.0;
    rep.checks.push_back(c);
  };

  const std::vector<Segment> segs = split_segments(trace);
  const double inf = std::numeric_limits<double>::infinity();

  double worst_decay_ratio = 1.0;
  double worst_slide_excess = 0.0;
  double worst_growth_ratio = 1.0;
  double min_rdt_slack = inf;
  double max_offtime = 0.0;
  double min_ontime = inf;
  std::size_t controlled_count = 0, uncontrolled_count = 0, interior_on = 0,
              completed_off = 0;

  for (std::size_t k = 0; k < segs.size(); ++k) {
    const Segment& seg = segs[k];
    const bool complete = seg.last_excl < trace.size();
    const double t0 = trace.t[seg.first];
    const double t_end =
        complete ? trace.t[seg.last_excl] : trace.t[trace.size() - 1];
    if (seg.controlled) {
      ++controlled_count;
      const double v_on = trace.energy[seg.first];
      for (std::size_t i = seg.first; i < seg.last_excl; ++i) {
        const double env = decay_envelope_energy(v_on, cert.gamma, lam2,
                                                 trace.t[i] - t0);
        const double vl = trace.energy[i];
        if (std::abs(trace.e2[i]) <= rep.sliding_band) {
          worst_slide_excess = std::max(worst_slide_excess, vl - env);
        } else if (env > 0.0) {
          worst_decay_ratio = std::max(worst_decay_ratio, vl / env);
        } else if (vl > 0.0) {
          worst_decay_ratio = inf;
        }
      }
      if (complete && seg.first > 0) {
        ++interior_on;
        min_ontime = std::min(min_ontime, t_end - t0);
      }
    } else {
      ++uncontrolled_count;
      const double v_off = trace.energy[seg.first];
      for (std::size_t i = seg.first; i < seg.last_excl; ++i) {
        double env = inf;
        try {
          env = growth_envelope_energy(v_off, cert.growth, trace.t[i] - t0);
        } catch (const EscapeTimeExceeded&) {
          worst_growth_ratio = inf;
          break;
        }
        const double vl = trace.energy[i];
        if (env > 0.0)
          worst_growth_ratio = std::max(worst_growth_ratio, vl / env);
        else if (vl > 0.0)
          worst_growth_ratio = inf;
      }
      if (complete) {
        ++completed_off;
        const double z_off =
            std::hypot(trace.e1[seg.first], trace.e2[seg.first]);
        const double ceiling =
            rdt_max_offtime(z_off, cert.growth, lam2);
        min_rdt_slack = std::min(min_rdt_slack, ceiling - (t_end - t0));
        max_offtime = std::max(max_offtime, t_end - t0);
      }
    }
  }

  {
    std::ostringstream name;
    name << "decay dominance off sliding samples (" << controlled_count
         << " controlled segments)";
    add(name.str(), 1.0 + 1e-9, worst_decay_ratio, true, false);
  }
  {
    std::ostringstream name;
    name << "decay dominance on sliding samples (" << controlled_count
         << " controlled segments)";
    add(name.str(), rep.sliding_tolerance, worst_slide_excess, true, false);
    rep.sliding_excess = worst_slide_excess;
  }
  {
    std::ostringstream name;
    name << "growth dominance (" << uncontrolled_count
         << " uncontrolled segments)";
    add(name.str(), 1.0 + 1e-9, worst_growth_ratio, true, false);
  }
  {
    std::ostringstream name;
    name << "off-time below the per-cycle escape ceiling (" << completed_off
         << " gaps)";
    add(name.str(), 0.0, min_rdt_slack == inf ? inf : min_rdt_slack, false,
        true);
  }
  {
    std::ostringstream name;
    name << "off-time within the certified budget (" << completed_off
         << " gaps)";
    add(name.str(), cert.dt_max_off, max_offtime, true, false);
  }
  {
    std::ostringstream name;
    name << "on-time above the certified minimum (" << interior_on
         << " interior segments)";
    add(name.str(), cert.dt_min_on, min_ontime, false, false);
  }

  // Off-switch trajectory condition, audited with the observed exit error of
  // every settled cycle.
  {
    const double settle_time =
        scenario.trajectory.ramp_rate > 0.0
            ? scenario.analysis.settle_periods / scenario.trajectory.ramp_rate
            : 0.0;
    double min_slack = inf;
    std::size_t settled = 0;
    for (const SwitchCycle& cyc : trace.schedule) {
      if (cyc.t_off < settle_time) continue;
      ++settled;
      const double needed = min_offswitch_speed_from_zoff(
          cert.q_dot_crit, alpha, cyc.z_off);
      const double have =
          desired_trajectory(scenario.trajectory, cyc.t_off).speed;
      min_slack = std::min(min_slack, have - needed);
    }
    std::ostringstream name;
    name << "off-switch desired speed above the coasting requirement ("
         << settled << " settled cycles)";
    add(name.str(), 0.0, min_slack, false, false);
  }

  // Tail containment: once a switch-on error enters the ultimate ball it must
  // stay there.
  {
    const double d = cert.ultimate.d_radius;
    double worst_tail = inf;
    for (std::size_t n = 0; n < trace.schedule.size(); ++n) {
      if (trace.schedule[n].z_on <= d) {
        rep.equilibration_index = static_cast<int>(n);
        worst_tail = 0.0;
        for (std::size_t m = n; m < trace.schedule.size(); ++m)
          worst_tail = std::max(worst_tail, trace.schedule[m].z_on);
        break;
      }
    }
    std::ostringstream name;
    name << "switch-on error within the ultimate ball past cycle "
         << rep.equilibration_index << " (" << trace.schedule.size()
         << " cycles)";
    add(name.str(), d, trace.schedule.empty() ? 0.0 : worst_tail, true, false);
  }

  {
    double z_max = 0.0;
    for (std::size_t i = 0; i < trace.size(); ++i)
      z_max = std::max(z_max, std::hypot(trace.e1[i], trace.e2[i]));
    add("error norm within the validated chi domain", z_dom, z_max, true,
        false);
  }

  rep.all_pass = std::all_of(rep.checks.begin(), rep.checks.end(),
                             [](const BoundCheck& c) { return c.pass; });
  return rep;
}

std::string render_bound_report(const BoundReport& rep) {
  std::ostringstream out;
  out << "bound audit\n";
  out << "  sliding band |e2| <= " << fmt(rep.sliding_band)
      << ", sliding tolerance " << fmt(rep.sliding_tolerance)
      << ", observed sliding excess " << fmt(rep.sliding_excess) << "\n";
  out << "  equilibration cycle index " << rep.equilibration_index << "\n";
  for (const BoundCheck& c : rep.checks) {
    out << "  [" << (c.pass ? "PASS" : "FAIL") << "] " << c.name
        << ": required=" << fmt(c.required) << " actual=" << fmt(c.actual)
        << " margin=" << fmt(c.margin) << "\n";
  }
  out << "  result: " << (rep.all_pass ? "ALL BOUNDS HOLD" : "VIOLATIONS FOUND")
      << "\n";
  return out.str();
}

}  // namespace fescycle
