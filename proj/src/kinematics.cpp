#include "fescycle/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fescycle/search.hpp"

namespace fescycle {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kScanGrid = 4096;
constexpr double kKneeMargin = 1e-3;      // rad, from 0 and pi
constexpr double kBoundaryTol = 1e-10;    // rad, event/boundary localization
constexpr double kSinguarSin = 1e-9;

double side_angle(double crank_angle, Side side) {
  return side == Side::Right ? crank_angle : crank_angle + std::numbers::pi;
}

// Squared hip-pedal distance of the right leg as a function of crank angle.
// With the clockwise-angle convention this is even about the dead-point
// angle: d2(q) = crank^2 + hip^2 + 2*crank*hip*cos(q - q_dead).
double hip_pedal_dist_sq(const RiderGeometry& g, double q) {
  const double hip_r = std::hypot(g.hip_offset_x, g.hip_offset_y);
  const double q_dead = std::atan2(g.hip_offset_y, g.hip_offset_x);
  return g.crank_length * g.crank_length + hip_r * hip_r +
         2.0 * g.crank_length * hip_r * std::cos(q - q_dead);
}

double knee_angle_at(const RiderGeometry& g, double q) {
  const double d2 = hip_pedal_dist_sq(g, q);
  const double lt = g.thigh_length;
  const double ls = g.shank_length;
  const double c = (lt * lt + ls * ls - d2) / (2.0 * lt * ls);
  if (c <= -1.0 || c >= 1.0) {
    throw ClosureViolation("leg chain does not close at this crank angle");
  }
  return std::acos(c);
}

double transfer_ratio_at(const RiderGeometry& g, double q) {
  const double hip_r = std::hypot(g.hip_offset_x, g.hip_offset_y);
  const double q_dead = std::atan2(g.hip_offset_y, g.hip_offset_x);
  const double qk = knee_angle_at(g, q);
  const double s = std::sin(qk);
  if (s < kSinguarSin) {
    throw SingularConfiguration("knee at a straight/folded singularity");
  }
  // qk'(q) from differentiating the law of cosines; the returned ratio is
  // -qk'(q) so that it is negative on the extension (propulsive) stroke.
  return g.crank_length * hip_r * std::sin(q - q_dead) /
         (g.thigh_length * g.shank_length * s);
}

}  // namespace

double wrap_angle(double angle) {
  double a = std::fmod(angle, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  return a;
}

void validate_geometry(const RiderGeometry& geom) {
  if (geom.thigh_length <= 0.0 || geom.shank_length <= 0.0 ||
      geom.crank_length <= 0.0) {
    throw ValidationFailure("segment and crank lengths must be positive");
  }
  if (geom.hip_offset_x < 0.0 || geom.hip_offset_y < 0.0 ||
      geom.hip_offset_x + geom.hip_offset_y <= 0.0) {
    throw ValidationFailure("hip offsets must be non-negative, not both zero");
  }
  for (int i = 0; i < kScanGrid; ++i) {
    const double q = kTwoPi * static_cast<double>(i) / kScanGrid;
    const double qk = knee_angle_at(geom, q);  // throws if it cannot close
    if (qk < kKneeMargin || qk > std::numbers::pi - kKneeMargin) {
      throw ClosureViolation("knee-angle margin below 1e-3 rad on the cycle");
    }
  }
}

double knee_angle(const RiderGeometry& geom, double crank_angle, Side side) {
  return knee_angle_at(geom, side_angle(crank_angle, side));
}

double torque_transfer_ratio(const RiderGeometry& geom, double crank_angle,
                             Side side) {
  return transfer_ratio_at(geom, side_angle(crank_angle, side));
}

std::array<double, 2> dead_points(const RiderGeometry& geom) {
  const double q0 = wrap_angle(std::atan2(geom.hip_offset_y, geom.hip_offset_x));
  const double q1 = wrap_angle(q0 + std::numbers::pi);
  return q0 <= q1 ? std::array<double, 2>{q0, q1}
                  : std::array<double, 2>{q1, q0};
}

double max_abs_torque_ratio(const RiderGeometry& geom) {
  const double q = grid_golden_max(
      [&](double x) { return std::abs(transfer_ratio_at(geom, x)); }, 0.0,
      kTwoPi, kScanGrid, kBoundaryTol);
  return std::abs(transfer_ratio_at(geom, q));
}

RegionMap stimulation_regions(const RiderGeometry& geom, double epsilon) {
  validate_geometry(geom);
  const double peak = grid_golden_max(
      [&](double x) { return -transfer_ratio_at(geom, x); }, 0.0, kTwoPi,
      kScanGrid, kBoundaryTol);
  const double max_neg = -transfer_ratio_at(geom, peak);
  if (!(epsilon > 0.0) || epsilon >= max_neg) {
    throw EpsilonTooLarge("epsilon must lie in (0, max(-transfer ratio))");
  }

  // Stimulability indicators for each side; positive inside that side's
  // region.  The two cannot be positive together because the sides' transfer
  // ratios never share a sign.
  const auto stim_r = [&](double q) {
    return -transfer_ratio_at(geom, q) - epsilon;
  };
  const auto stim_l = [&](double q) {
    return -transfer_ratio_at(geom, q + std::numbers::pi) - epsilon;
  };

  std::vector<double> boundaries;
  for (const auto& f : {std::function<double(double)>(stim_r),
                        std::function<double(double)>(stim_l)}) {
    double prev = f(0.0);
    for (int i = 1; i <= kScanGrid; ++i) {
      const double q = kTwoPi * static_cast<double>(i) / kScanGrid;
      const double cur = f(q);
      if ((prev > 0.0) != (cur > 0.0)) {
        boundaries.push_back(wrap_angle(
            bisect(f, kTwoPi * (i - 1) / kScanGrid, q, kBoundaryTol)));
      }
      prev = cur;
    }
  }
  std::sort(boundaries.begin(), boundaries.end());

  RegionMap map;
  map.epsilon = epsilon;
  map.cell_boundaries = boundaries;
  map.cell_tags.reserve(boundaries.size());
  for (std::size_t i = 0; i < boundaries.size(); ++i) {
    const double lo = boundaries[i];
    const double hi =
        i + 1 < boundaries.size() ? boundaries[i + 1] : boundaries[0] + kTwoPi;
    const double mid = wrap_angle(0.5 * (lo + hi));
    RegionTag tag = RegionTag::Uncontrolled;
    if (stim_r(mid) > 0.0) {
      tag = RegionTag::RightStim;
    } else if (stim_l(mid) > 0.0) {
      tag = RegionTag::LeftStim;
    }
    map.cell_tags.push_back(tag);
  }
  return map;
}

RegionTag RegionMap::tag_at(double crank_angle) const {
  const double q = wrap_angle(crank_angle);
  // First boundary at or below q; q below every boundary falls in the
  // wrapping last cell.
  const auto it =
      std::upper_bound(cell_boundaries.begin(), cell_boundaries.end(), q);
  const std::size_t idx =
      it == cell_boundaries.begin()
          ? cell_tags.size() - 1
          : static_cast<std::size_t>(it - cell_boundaries.begin()) - 1;
  return cell_tags[idx];
}

std::vector<AngleInterval> RegionMap::intervals(RegionTag tag) const {
  std::vector<AngleInterval> out;
  const std::size_t n = cell_boundaries.size();
  if (n == 0) return out;
  const auto cell_measure = [&](std::size_t i) {
    const double hi =
        i + 1 < n ? cell_boundaries[i + 1] : cell_boundaries[0] + kTwoPi;
    return hi - cell_boundaries[i];
  };
  // Start the circular scan at a cell whose predecessor carries a different
  // tag so that a run straddling the wrap point merges into one interval.
  std::size_t start = 0;
  while (start < n && cell_tags[(start + n - 1) % n] == cell_tags[start]) {
    ++start;
  }
  if (start == n) {  // a single tag covers the whole circle
    if (cell_tags[0] == tag) out.push_back({0.0, kTwoPi});
    return out;
  }
  std::size_t i = start;
  do {
    const RegionTag run_tag = cell_tags[i];
    const double lo = cell_boundaries[i];
    double run = 0.0;
    std::size_t j = i;
    do {
      run += cell_measure(j);
      j = (j + 1) % n;
    } while (cell_tags[j] == run_tag && j != start);
    if (run_tag == tag) out.push_back({lo, lo + run});
    i = j;
  } while (i != start);
  std::sort(out.begin(), out.end(),
            [](const AngleInterval& a, const AngleInterval& b) {
              return a.lo < b.lo;
            });
  return out;
}

double RegionMap::measure(RegionTag tag) const {
  double total = 0.0;
  for (const AngleInterval& iv : intervals(tag)) total += iv.measure();
  return total;
}

}  // namespace fescycle
