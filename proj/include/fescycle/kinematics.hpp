#pragma once

#include <array>
#include <vector>

#include "fescycle/errors.hpp"

namespace fescycle {

// Planar cycle-rider linkage, all lengths in metres.
//
// Frame convention: the crank axis is the origin, +x is the direction the
// rider faces, +y is up.  The crank angle q is measured clockwise from +x to
// the right crank arm, so forward pedalling is q increasing and the right
// pedal sits at crank_length * (cos q, -sin q).  The left crank arm leads the
// right by half a revolution.  The hip joint is fixed at
// (-hip_offset_x, hip_offset_y): behind and above the crank axis, as on a
// recumbent trike.
//
// With this convention the hip, crank axis and pedal are collinear (a dead
// point of the transmission) exactly at q = atan2(hip_offset_y, hip_offset_x)
// plus integer multiples of pi.
struct RiderGeometry {
  double thigh_length = 0.0;   // hip to knee
  double shank_length = 0.0;   // knee to pedal, including the foot/boot offset
  double crank_length = 0.0;   // crank axis to pedal
  double hip_offset_x = 0.0;   // horizontal crank-to-hip distance, >= 0
  double hip_offset_y = 0.0;   // vertical crank-to-hip distance, >= 0
};

enum class Side { Right, Left };

enum class RegionTag { RightStim, LeftStim, Uncontrolled };

// Crank-angle interval [lo, hi) with lo in [0, 2*pi).  hi may exceed 2*pi,
// meaning the interval wraps through zero; hi - lo is always its measure.
struct AngleInterval {
  double lo = 0.0;
  double hi = 0.0;
  double measure() const { return hi - lo; }
};

// Partition of the crank circle into right-stimulation, left-stimulation and
// uncontrolled intervals for one threshold epsilon.  `cell_boundaries` /
// `cell_tags` give a flat lookup table: cell i spans
// [cell_boundaries[i], cell_boundaries[i+1]) with the last cell wrapping back
// to cell_boundaries[0].
struct RegionMap {
  double epsilon = 0.0;
  std::vector<double> cell_boundaries;  // sorted, in [0, 2*pi)
  std::vector<RegionTag> cell_tags;     // cell_tags.size() == cell_boundaries.size()

  RegionTag tag_at(double crank_angle) const;
  std::vector<AngleInterval> intervals(RegionTag tag) const;  // merged across wrap
  double measure(RegionTag tag) const;
};

// Reduce any angle to [0, 2*pi).
double wrap_angle(double angle);

// Throws ClosureViolation unless the leg chain closes with at least 1e-3 rad
// of knee-angle margin from 0 and pi everywhere on the crank circle.
void validate_geometry(const RiderGeometry& geom);

// Interior knee angle in (0, pi) from the hip-pedal distance via the law of
// cosines.  Throws ClosureViolation if the chain cannot close at this angle.
double knee_angle(const RiderGeometry& geom, double crank_angle, Side side);

// Knee-to-crank torque transfer ratio: minus the derivative of the interior
// knee angle with respect to the crank angle.  Negative exactly where
// quadriceps extension torque drives the crank forward.  Throws
// SingularConfiguration if the knee is straight or folded within 1e-9.
double torque_transfer_ratio(const RiderGeometry& geom, double crank_angle,
                             Side side);

// The two crank angles in [0, 2*pi) where the transfer ratio of both legs
// vanishes, sorted ascending.
std::array<double, 2> dead_points(const RiderGeometry& geom);

// Peak |transfer ratio| over the crank circle (either side; they agree),
// located to 1e-10 rad.
double max_abs_torque_ratio(const RiderGeometry& geom);

// Partition the crank circle by the rule: a side is stimulable where the
// negated transfer ratio exceeds epsilon.  Requires
// 0 < epsilon < max over q of (-transfer ratio); throws EpsilonTooLarge
// otherwise.  Boundaries are located to 1e-10 rad.
RegionMap stimulation_regions(const RiderGeometry& geom, double epsilon);

}  // namespace fescycle
