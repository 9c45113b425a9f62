#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fescycle/analysis.hpp"
#include "fescycle/scenario.hpp"

namespace fescycle {

// One stimulation cycle: switch-on at a region boundary, switch-off at the
// next boundary.  Only boundary-crossing events enter the schedule; the
// initial in-region start and a dangling final segment do not.
struct SwitchCycle {
  int index = 0;
  double t_on = 0.0;
  double q_on = 0.0;  // wrapped crank angle at the event
  double t_off = 0.0;
  double q_off = 0.0;
  double z_on = 0.0;  // error norm at the events
  double z_off = 0.0;
  double energy_on = 0.0;  // V_L at the events
  double energy_off = 0.0;
};

struct SaturationEvent {
  double t = 0.0;
  double command = 0.0;
};

// Channels are parallel arrays, one entry per accepted integrator step;
// event-localized sub-steps appear as extra samples so every switching or
// sign-change instant is a sample.
struct SimulationTrace {
  std::vector<double> t, q, qdot, q_des, qdot_des, e1, e1dot, e2, energy,
      u_right, u_left;
  std::vector<RegionTag> region;
  std::vector<SwitchCycle> schedule;
  std::vector<SaturationEvent> saturation_events;
  double revolutions = 0.0;
  std::size_t size() const { return t.size(); }
};

// Fixed-step classical Runge-Kutta on the switched closed loop.  The
// controller is evaluated inside every stage with the stage's own crank
// angle deciding the stimulation gate.  Steps straddling a region boundary
// are split at the crossing (bisection to 1e-10 rad); steps straddling an
// e2 sign change are split likewise (|e2| < 1e-10) so the discontinuous
// control never flips silently inside a step.  Throws EscapeDetected when
// ||z|| > 1e6 and NonForwardProgress when qdot <= 0 persists beyond 10 s
// inside the uncontrolled region.
SimulationTrace simulate(const Scenario& scenario);

struct BoundCheck {
  std::string name;
  double required = 0.0;
  double actual = 0.0;
  double margin = 0.0;
  bool pass = false;
};

struct BoundReport {
  std::vector<BoundCheck> checks;
  double sliding_band = 0.0;       // |e2| below this counts as sliding
  double sliding_tolerance = 0.0;  // absolute V_L allowance on sliding samples
  double sliding_excess = 0.0;     // worst observed V_L beyond the decay envelope there
  int equilibration_index = -1;    // first cycle with z_on <= d_radius
  bool all_pass = false;
};

// Checks the recorded run against the certificate: decay-envelope dominance
// per controlled segment (ratio tolerance 1e-9 off sliding samples, an
// absolute step-size-derived allowance on sliding samples), growth-envelope
// dominance per uncontrolled segment, the per-cycle reverse dwell-time
// ceiling, the dwell budgets, off-switch trajectory condition on settled
// cycles, tail containment in the ultimate ball, and containment of ||z|| in
// the domain the chi constants were validated on.  Violations are report
// entries, never exceptions.
BoundReport audit_bounds(const SimulationTrace& trace, const Certificate& cert,
                         const Scenario& scenario);

std::string render_bound_report(const BoundReport& report);

}  // namespace fescycle
