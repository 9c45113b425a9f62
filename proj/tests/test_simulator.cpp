#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "fescycle/config.hpp"
#include "fescycle/errors.hpp"
#include "fescycle/simulator.hpp"

using namespace fescycle;

namespace {

// Undriven, loss-free variant of the default rig: zero feedback gains shut
// the stimulation off entirely, and every dissipative or exogenous torque is
// removed so total mechanical energy is an invariant of the flow.
Scenario ballistic_scenario() {
  Scenario s = default_scenario();
  s.gains.k1 = s.gains.k2 = s.gains.k3 = s.gains.k4 = 0.0;
  s.gains.alpha = 1.0;
  s.dynamics.crank_damping = 0.0;
  s.dynamics.passive_tanh = 0.0;
  s.dynamics.passive_linear = 0.0;
  s.dynamics.disturbance_amplitude = 0.0;
  s.initial.speed = 2.0;
  s.duration = 2.0;
  s.max_revolutions = 0;
  return s;
}

double mech_energy(const Scenario& s, double q, double qdot) {
  return 0.5 * inertia(s.dynamics, s.geometry, q) * qdot * qdot +
         potential_energy(s.dynamics, s.geometry, q);
}

const BoundCheck* find_check(const BoundReport& rep, const std::string& prefix) {
  for (const BoundCheck& c : rep.checks)
    if (c.name.rfind(prefix, 0) == 0) return &c;
  return nullptr;
}

// Flat-line trace: perfect tracking (z = 0) with a prescribed region tag
// timeline, sampled every 10 ms.  Exercises the audit bookkeeping without an
// integrator in the loop.
SimulationTrace synthetic_trace(double t_gap_on, double t_gap_off,
                                double t_end) {
  SimulationTrace tr;
  const double h = 0.01;
  for (int i = 0;; ++i) {
    const double t = h * i;
    if (t > t_end + 1e-12) break;
    tr.t.push_back(t);
    tr.q.push_back(3.665 * t);
    tr.qdot.push_back(3.665);
    tr.q_des.push_back(3.665 * t);
    tr.qdot_des.push_back(3.665);
    tr.e1.push_back(0.0);
    tr.e1dot.push_back(0.0);
    tr.e2.push_back(0.0);
    tr.energy.push_back(0.0);
    tr.u_right.push_back(0.0);
    tr.u_left.push_back(0.0);
    const bool in_gap = t >= t_gap_on - 1e-12 && t < t_gap_off - 1e-12;
    tr.region.push_back(in_gap ? RegionTag::Uncontrolled
                                : RegionTag::RightStim);
  }
  return tr;
}

// Certificate with hand-picked constants that the flat-line trace satisfies.
Certificate synthetic_certificate() {
  Certificate cert;
  cert.weights = LyapunovWeights{0.5, 1.0};
  cert.gamma = 1.0;
  cert.certified = ChiBound{1.0, 1.0, 1.0, 4.0};
  cert.z_domain = 4.0;
  cert.growth = growth_constants(ChiBound{1.0, 1.0, 1.0, 0.0}, 0.5);
  cert.dt_min_on = 0.05;
  cert.dt_max_off = 0.2;
  cert.q_dot_crit = 1.0;
  cert.min_offswitch = 1.0;
  cert.properties.inertia_min = 1.0;
  cert.properties.inertia_max = 1.0;
  cert.properties.coriolis_coeff = 0.1;
  cert.properties.transfer_max = 1.0;
  cert.properties.gain_max = 1.0;
  cert.ultimate =
      ultimate_bound(cert.gamma, cert.weights, cert.growth, 4.0, 0.2);
  return cert;
}

}  // namespace

TEST_CASE("undriven loss-free run conserves mechanical energy") {
  const Scenario s = ballistic_scenario();
  const SimulationTrace tr = simulate(s);
  REQUIRE(tr.size() > 1);
  const double e0 = mech_energy(s, tr.q[0], tr.qdot[0]);
  double worst = 0.0;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const double e = mech_energy(s, tr.q[i], tr.qdot[i]);
    worst = std::max(worst, std::abs(e - e0));
  }
  CHECK(worst / std::max(std::abs(e0), 1.0) < 1e-7);
}

TEST_CASE("repeated runs are bit-identical") {
  Scenario s = default_scenario();
  s.duration = 1.0;
  s.max_revolutions = 0;
  const SimulationTrace a = simulate(s);
  const SimulationTrace b = simulate(s);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.t[i] == b.t[i]);
    CHECK(a.q[i] == b.q[i]);
    CHECK(a.qdot[i] == b.qdot[i]);
    CHECK(a.e2[i] == b.e2[i]);
    CHECK(a.energy[i] == b.energy[i]);
    CHECK(a.u_right[i] == b.u_right[i]);
    CHECK(a.u_left[i] == b.u_left[i]);
    CHECK(a.region[i] == b.region[i]);
  }
  REQUIRE(a.schedule.size() == b.schedule.size());
  for (std::size_t i = 0; i < a.schedule.size(); ++i) {
    CHECK(a.schedule[i].t_on == b.schedule[i].t_on);
    CHECK(a.schedule[i].t_off == b.schedule[i].t_off);
  }
  CHECK(a.revolutions == b.revolutions);
}

TEST_CASE("switch events land on the stimulation boundaries") {
  Scenario s = default_scenario();
  s.duration = 8.0;
  s.max_revolutions = 0;
  const SimulationTrace tr = simulate(s);
  REQUIRE(tr.schedule.size() >= 3);

  const auto boundary_gap = [&](double q) {
    const double right =
        std::abs(-torque_transfer_ratio(s.geometry, q, Side::Right) -
                 s.gains.epsilon);
    const double left =
        std::abs(-torque_transfer_ratio(s.geometry, q, Side::Left) -
                 s.gains.epsilon);
    return std::min(right, left);
  };

  double prev_off = -1.0;
  for (const SwitchCycle& c : tr.schedule) {
    CHECK(c.t_on > prev_off);
    CHECK(c.t_off > c.t_on);
    prev_off = c.t_off;
    CHECK(boundary_gap(c.q_on) < 1e-7);
    CHECK(boundary_gap(c.q_off) < 1e-7);
    CHECK(c.z_on >= 0.0);
    CHECK(c.energy_off >= 0.0);
  }

  // Samples agree with the region partition, and stimulation is one-sided.
  const RegionMap regions = stimulation_regions(s.geometry, s.gains.epsilon);
  for (std::size_t i = 0; i < tr.size(); ++i) {
    CHECK(tr.region[i] == regions.tag_at(wrap_angle(tr.q[i])));
    CHECK(tr.u_right[i] * tr.u_left[i] == 0.0);
    if (tr.u_right[i] != 0.0) CHECK(tr.region[i] == RegionTag::RightStim);
    if (tr.u_left[i] != 0.0) CHECK(tr.region[i] == RegionTag::LeftStim);
    if (tr.region[i] == RegionTag::Uncontrolled) {
      CHECK(tr.u_right[i] == 0.0);
      CHECK(tr.u_left[i] == 0.0);
    }
  }
}

TEST_CASE("saturation events follow the configured threshold") {
  Scenario s = default_scenario();
  s.duration = 1.0;
  s.max_revolutions = 0;
  const SimulationTrace loud = simulate(s);
  CHECK(!loud.saturation_events.empty());
  for (const SaturationEvent& ev : loud.saturation_events)
    CHECK(std::abs(ev.command) > s.analysis.sat_voltage);

  s.analysis.sat_voltage = 0.0;  // disables the log
  const SimulationTrace quiet = simulate(s);
  CHECK(quiet.saturation_events.empty());
}

TEST_CASE("moderate hand-tuned gains still pedal forward") {
  Scenario s = default_scenario();
  s.gains.alpha = 7.0;
  s.gains.k1 = 10.0;
  s.gains.k2 = 0.1;
  s.gains.k3 = 0.1;
  s.gains.k4 = 0.1;
  s.duration = 15.0;
  s.max_revolutions = 0;
  const SimulationTrace tr = simulate(s);
  CHECK(tr.revolutions >= 1.0);
  double top_speed = 0.0;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    top_speed = std::max(top_speed, std::abs(tr.qdot[i]));
    CHECK(tr.u_right[i] * tr.u_left[i] == 0.0);
  }
  CHECK(top_speed < 12.0);
}

TEST_CASE("runaway error raises EscapeDetected") {
  Scenario s = ballistic_scenario();
  s.dynamics.disturbance_amplitude = 2e7;
  s.duration = 10.0;
  CHECK_THROWS_AS(simulate(s), EscapeDetected);
}

TEST_CASE("a crank stuck in the gap raises NonForwardProgress") {
  Scenario s = ballistic_scenario();
  s.dynamics.gravity = 0.0;
  s.dynamics.crank_damping = 100.0;
  // Effectively constant resisting torque: the crank creeps backwards at
  // about amplitude/damping rad/s and needs > 10 s to cross the gap.
  s.dynamics.disturbance_amplitude = 5.0;
  s.dynamics.disturbance_frequency = 1e-9;
  s.dynamics.disturbance_phase = std::numbers::pi / 2.0;
  s.initial.speed = 0.3;
  s.duration = 200.0;
  CHECK_THROWS_AS(simulate(s), NonForwardProgress);
}

TEST_CASE("halving the step leaves a smooth run unchanged") {
  Scenario s = ballistic_scenario();
  const SimulationTrace coarse = simulate(s);
  s.step_size *= 0.5;
  const SimulationTrace fine = simulate(s);
  REQUIRE(!coarse.t.empty());
  REQUIRE(!fine.t.empty());
  CHECK(coarse.t.back() == doctest::Approx(fine.t.back()).epsilon(1e-12));
  CHECK(std::abs(coarse.q.back() - fine.q.back()) < 1e-8);
  CHECK(std::abs(coarse.qdot.back() - fine.qdot.back()) < 1e-8);
}

TEST_CASE("audit accepts a flat-line trace inside every budget") {
  const SimulationTrace tr = synthetic_trace(1.0, 1.1, 1.15);
  const Certificate cert = synthetic_certificate();
  const Scenario s = default_scenario();
  const BoundReport rep = audit_bounds(tr, cert, s);
  CHECK(rep.all_pass);
  const BoundCheck* budget = find_check(rep, "off-time within the certified budget");
  REQUIRE(budget != nullptr);
  CHECK(budget->pass);
  CHECK(budget->actual == doctest::Approx(0.1));
  const std::string text = render_bound_report(rep);
  CHECK(text.find("result: ALL BOUNDS HOLD") != std::string::npos);
}

TEST_CASE("audit flags a gap that overstays the certified budget") {
  const SimulationTrace tr = synthetic_trace(1.0, 1.35, 1.4);
  const Certificate cert = synthetic_certificate();
  const Scenario s = default_scenario();
  const BoundReport rep = audit_bounds(tr, cert, s);
  CHECK_FALSE(rep.all_pass);
  const BoundCheck* budget = find_check(rep, "off-time within the certified budget");
  REQUIRE(budget != nullptr);
  CHECK_FALSE(budget->pass);
  CHECK(budget->actual == doctest::Approx(0.35));
  // The growth envelope itself is still respected on that longer gap.
  const BoundCheck* growth = find_check(rep, "growth dominance");
  REQUIRE(growth != nullptr);
  CHECK(growth->pass);
  const std::string text = render_bound_report(rep);
  CHECK(text.find("result: VIOLATIONS FOUND") != std::string::npos);
}

TEST_CASE("audit rejects unusable inputs outright") {
  const Scenario s = default_scenario();
  const Certificate hollow;  // gamma and the growth constants are unset
  const SimulationTrace tr = synthetic_trace(1.0, 1.1, 1.15);
  CHECK_THROWS_AS(audit_bounds(tr, hollow, s), ValidationFailure);
  const Certificate cert = synthetic_certificate();
  const SimulationTrace empty;
  CHECK_THROWS_AS(audit_bounds(empty, cert, s), ValidationFailure);
}
