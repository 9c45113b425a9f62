#pragma once

#include "fescycle/controller.hpp"
#include "fescycle/dynamics.hpp"
#include "fescycle/kinematics.hpp"

namespace fescycle {

// Knobs for the certification pipeline that are not part of the physical
// model or the controller itself.
struct AnalysisOptions {
  double speed_domain = 8.0;   // rad/s, |qdot| range for model-bound sampling
  double z_domain = 0.0;       // error-norm cap for the certified bound
                               // constants; 0 selects 2*sqrt(l2/l1)*||z0|| + 1
  double z_reference = 0.05;   // design entry error for dwell-time budgets
  double dt_max_off = 0.5;     // s, assumed ceiling on uncontrolled time,
                               // audited against every simulated cycle
  double settle_periods = 5.0; // ramp counts as settled after this many time
                               // constants; per-cycle speed conditions are
                               // audited from then on
  double sat_voltage = 40.0;   // |v| above this is logged as saturation
};

struct Scenario {
  RiderGeometry geometry;
  DynamicsParams dynamics;
  ControllerGains gains;
  TrajectorySpec trajectory;
  CrankState initial;
  double step_size = 1e-4;        // s
  double duration = 0.0;          // s, 0 = no time cap
  double max_revolutions = 90.0;  // 0 = no revolution cap
  AnalysisOptions analysis;
};

// Region map implied by the scenario's geometry and threshold.
RegionMap scenario_regions(const Scenario& scenario);

// Enforces the structural invariants: geometry closes, threshold admissible,
// step size within [1e-6, 1e-2], initial angle inside a stimulation region,
// and at least one stopping rule set.  Throws ConfigError naming the
// violated invariant.
void validate_scenario(const Scenario& scenario);

}  // namespace fescycle
