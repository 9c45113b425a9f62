#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fescycle/kinematics.hpp"
#include "oracles.hpp"

using namespace fescycle;
using std::numbers::pi;

namespace {

RiderGeometry default_geometry() {
  RiderGeometry g;
  g.thigh_length = 0.40;
  g.shank_length = 0.43;
  g.crank_length = 0.17;
  g.hip_offset_x = 0.60;
  g.hip_offset_y = 0.12;
  return g;
}

Eigen::Vector2d pedal_position(const RiderGeometry& g, double q, Side side) {
  const double a = side == Side::Right ? q : q + pi;
  return g.crank_length * Eigen::Vector2d(std::cos(a), -std::sin(a));
}

Eigen::Vector2d hip_position(const RiderGeometry& g) {
  return {-g.hip_offset_x, g.hip_offset_y};
}

}  // namespace

TEST_CASE("knee angle matches a geometric circle-intersection oracle") {
  const RiderGeometry g = default_geometry();
  for (int i = 0; i < 256; ++i) {
    const double q = 2.0 * pi * i / 256.0;
    for (Side side : {Side::Right, Side::Left}) {
      const auto knee = oracles::knee_by_circle_intersection(
          hip_position(g), pedal_position(g, q, side), g.thigh_length,
          g.shank_length);
      const double expected = oracles::knee_angle_from_joints(
          hip_position(g), knee, pedal_position(g, q, side));
      CHECK(knee_angle(g, q, side) == doctest::Approx(expected).epsilon(1e-10));
    }
  }
}

TEST_CASE("knee angle is 60 degrees for an equilateral closure") {
  // Pick segment lengths equal and find a crank angle where the hip-pedal
  // distance equals them, so the triangle is equilateral.
  RiderGeometry g = default_geometry();
  g.thigh_length = 0.45;
  g.shank_length = 0.45;
  // Hip-pedal distance spans [hip_r - crank, hip_r + crank] = [0.44, 0.78]
  // which contains 0.45, so such an angle exists.
  const auto dist = [&](double q) {
    return (pedal_position(g, q, Side::Right) - hip_position(g)).norm() - 0.45;
  };
  double lo = dead_points(g)[0];          // max extension: largest distance
  double hi = dead_points(g)[1];          // max flexion: smallest distance
  double q_eq = 0.0;
  {
    // Distance decreases monotonically between the two dead points.
    double a = lo, b = hi;
    for (int it = 0; it < 200; ++it) {
      const double m = 0.5 * (a + b);
      (dist(m) > 0.0 ? a : b) = m;
      q_eq = m;
    }
  }
  CHECK(knee_angle(g, q_eq, Side::Right) == doctest::Approx(pi / 3).epsilon(1e-8));
}

TEST_CASE("knee angle peaks at the far dead point") {
  const RiderGeometry g = default_geometry();
  const double q_far = dead_points(g)[0];  // pedal pointing away from the hip
  const double peak = knee_angle(g, q_far, Side::Right);
  for (int i = 0; i < 512; ++i) {
    const double q = 2.0 * pi * i / 512.0;
    CHECK(knee_angle(g, q, Side::Right) <= peak + 1e-12);
  }
}

TEST_CASE("left leg is the right leg half a revolution ahead") {
  const RiderGeometry g = default_geometry();
  for (int i = 0; i < 128; ++i) {
    const double q = 2.0 * pi * i / 128.0;
    CHECK(knee_angle(g, q, Side::Left) ==
          doctest::Approx(knee_angle(g, q + pi, Side::Right)).epsilon(1e-14));
    CHECK(torque_transfer_ratio(g, q, Side::Left) ==
          doctest::Approx(torque_transfer_ratio(g, q + pi, Side::Right))
              .epsilon(1e-14));
  }
}

TEST_CASE("transfer ratio equals minus the knee-angle derivative") {
  const RiderGeometry g = default_geometry();
  double worst = 0.0;
  for (int i = 0; i < 4096; ++i) {
    const double q = 2.0 * pi * i / 4096.0;
    const double fd = -oracles::central_diff(
        [&](double x) { return knee_angle(g, x, Side::Right); }, q);
    const double closed = torque_transfer_ratio(g, q, Side::Right);
    const double rel = std::abs(closed - fd) / std::max(std::abs(fd), 1e-12);
    worst = std::max(worst, rel);
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("transfer ratio is 2*pi periodic") {
  const RiderGeometry g = default_geometry();
  for (int i = 0; i < 64; ++i) {
    const double q = 2.0 * pi * i / 64.0;
    CHECK(torque_transfer_ratio(g, q, Side::Right) ==
          doctest::Approx(torque_transfer_ratio(g, q + 2.0 * pi, Side::Right))
              .epsilon(1e-12));
  }
}

TEST_CASE("dead points: analytic formula and vanishing transfer ratio") {
  RiderGeometry g = default_geometry();
  const auto dp = dead_points(g);
  CHECK(dp[0] == doctest::Approx(std::atan(0.12 / 0.60)).epsilon(1e-15));
  CHECK(dp[1] == doctest::Approx(std::atan(0.12 / 0.60) + pi).epsilon(1e-15));
  CHECK(dp[0] == doctest::Approx(0.19740).epsilon(1e-4));
  CHECK(dp[1] == doctest::Approx(3.33899).epsilon(1e-4));
  for (double q : dp) {
    CHECK(std::abs(torque_transfer_ratio(g, q, Side::Right)) < 1e-9);
    CHECK(std::abs(torque_transfer_ratio(g, q, Side::Left)) < 1e-9);
  }

  g.hip_offset_x = 0.5;
  g.hip_offset_y = 0.5;
  const auto dp_diag = dead_points(g);
  CHECK(dp_diag[0] == doctest::Approx(pi / 4).epsilon(1e-15));
  CHECK(dp_diag[1] == doctest::Approx(5 * pi / 4).epsilon(1e-15));

  g.hip_offset_y = 0.0;
  const auto dp_level = dead_points(g);
  CHECK(dp_level[0] == doctest::Approx(0.0));
  CHECK(dp_level[1] == doctest::Approx(pi).epsilon(1e-15));
}

TEST_CASE("the sides' transfer ratios never share a sign") {
  const RiderGeometry g = default_geometry();
  for (int i = 0; i < 4096; ++i) {
    const double q = 2.0 * pi * i / 4096.0;
    CHECK(torque_transfer_ratio(g, q, Side::Right) *
              torque_transfer_ratio(g, q, Side::Left) <=
          1e-18);
  }
}

TEST_CASE("transfer ratio is negative exactly on the extension stroke") {
  // Between the flexion dead point and the extension dead point the right
  // knee opens, so the right ratio must be negative there and positive on
  // the return stroke.
  const RiderGeometry g = default_geometry();
  const auto dp = dead_points(g);
  for (int i = 1; i < 256; ++i) {
    const double q_ext = dp[1] + (dp[0] + 2.0 * pi - dp[1]) * i / 256.0;
    CHECK(torque_transfer_ratio(g, q_ext, Side::Right) < 0.0);
    const double q_flex = dp[0] + (dp[1] - dp[0]) * i / 256.0;
    CHECK(torque_transfer_ratio(g, q_flex, Side::Right) > 0.0);
  }
}

TEST_CASE("peak |transfer ratio| agrees with a dense grid scan") {
  const RiderGeometry g = default_geometry();
  const double refined = max_abs_torque_ratio(g);
  const double gridded = oracles::grid_max(
      [&](double q) {
        return std::abs(torque_transfer_ratio(g, q, Side::Right));
      },
      0.0, 2.0 * pi, 1000000);
  CHECK(refined >= gridded - 1e-12);
  CHECK(refined == doctest::Approx(gridded).epsilon(1e-8));
  CHECK(refined > 0.0);
}

TEST_CASE("stimulation regions partition the circle") {
  const RiderGeometry g = default_geometry();
  const double eps = 0.5 * max_abs_torque_ratio(g);
  const RegionMap map = stimulation_regions(g, eps);

  double total = 0.0;
  for (RegionTag tag :
       {RegionTag::RightStim, RegionTag::LeftStim, RegionTag::Uncontrolled}) {
    total += map.measure(tag);
  }
  CHECK(total == doctest::Approx(2.0 * pi).epsilon(1e-12));

  // Tag lookup must agree with direct evaluation of the defining rule.
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> uq(0.0, 2.0 * pi);
  for (int i = 0; i < 100000; ++i) {
    const double q = uq(rng);
    const double br = torque_transfer_ratio(g, q, Side::Right);
    const double bl = torque_transfer_ratio(g, q, Side::Left);
    RegionTag expected = RegionTag::Uncontrolled;
    if (-br > eps) expected = RegionTag::RightStim;
    if (-bl > eps) expected = RegionTag::LeftStim;
    // Skip points within localization tolerance of a boundary.
    if (std::abs(-br - eps) < 1e-9 || std::abs(-bl - eps) < 1e-9) continue;
    CHECK(map.tag_at(q) == expected);
  }
}

TEST_CASE("region boundaries satisfy the threshold equation") {
  const RiderGeometry g = default_geometry();
  const double eps = 0.5 * max_abs_torque_ratio(g);
  const RegionMap map = stimulation_regions(g, eps);
  for (double b : map.cell_boundaries) {
    const double br = -torque_transfer_ratio(g, b, Side::Right);
    const double bl = -torque_transfer_ratio(g, b, Side::Left);
    CHECK(std::min(std::abs(br - eps), std::abs(bl - eps)) < 1e-7);
  }
}

TEST_CASE("each uncontrolled interval contains exactly one dead point") {
  const RiderGeometry g = default_geometry();
  const auto dp = dead_points(g);
  for (double eps_frac : {0.2, 0.5, 0.8}) {
    const RegionMap map =
        stimulation_regions(g, eps_frac * max_abs_torque_ratio(g));
    const auto gaps = map.intervals(RegionTag::Uncontrolled);
    REQUIRE(gaps.size() == 2);
    for (const AngleInterval& iv : gaps) {
      int contained = 0;
      for (double d : dp) {
        for (double shift : {0.0, 2.0 * pi}) {
          if (d + shift > iv.lo && d + shift < iv.hi) ++contained;
        }
      }
      CHECK(contained == 1);
    }
  }
}

TEST_CASE("region measures against a brute-force scan") {
  const RiderGeometry g = default_geometry();
  const double eps = 0.5 * max_abs_torque_ratio(g);
  const RegionMap map = stimulation_regions(g, eps);
  const int n = 1000000;
  int in_r = 0, in_l = 0;
  for (int i = 0; i < n; ++i) {
    const double q = 2.0 * pi * (i + 0.5) / n;
    if (-torque_transfer_ratio(g, q, Side::Right) > eps) ++in_r;
    if (-torque_transfer_ratio(g, q, Side::Left) > eps) ++in_l;
  }
  CHECK(map.measure(RegionTag::RightStim) ==
        doctest::Approx(2.0 * pi * in_r / n).epsilon(1e-5));
  CHECK(map.measure(RegionTag::LeftStim) ==
        doctest::Approx(2.0 * pi * in_l / n).epsilon(1e-5));
}

TEST_CASE("uncontrolled measure shrinks with epsilon at both extremes") {
  const RiderGeometry g = default_geometry();
  const double peak = max_abs_torque_ratio(g);
  const RegionMap tiny = stimulation_regions(g, 1e-6 * peak);
  CHECK(tiny.measure(RegionTag::Uncontrolled) < 0.05);
  const RegionMap huge = stimulation_regions(g, 0.999 * peak);
  CHECK(huge.measure(RegionTag::RightStim) < 0.2);
  CHECK(huge.measure(RegionTag::LeftStim) < 0.2);
  // Controlled measure strictly decreases as the threshold rises.
  double prev = tiny.measure(RegionTag::RightStim) + tiny.measure(RegionTag::LeftStim);
  for (double f : {0.2, 0.4, 0.6, 0.8, 0.95}) {
    const RegionMap m = stimulation_regions(g, f * peak);
    const double cur =
        m.measure(RegionTag::RightStim) + m.measure(RegionTag::LeftStim);
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("epsilon outside (0, peak) is rejected") {
  const RiderGeometry g = default_geometry();
  const double peak = max_abs_torque_ratio(g);
  CHECK_THROWS_AS(stimulation_regions(g, 0.0), EpsilonTooLarge);
  CHECK_THROWS_AS(stimulation_regions(g, -0.1), EpsilonTooLarge);
  CHECK_THROWS_AS(stimulation_regions(g, peak * 1.001), EpsilonTooLarge);
}

TEST_CASE("geometry that cannot close is rejected") {
  RiderGeometry g = default_geometry();
  g.thigh_length = 0.3;
  g.shank_length = 0.3;  // 0.6 < max hip-pedal distance 0.7819
  CHECK_THROWS_AS(validate_geometry(g), ClosureViolation);

  RiderGeometry flat = default_geometry();
  flat.thigh_length = 0.42;
  // Chain reach exceeds the farthest pedal position by only 1e-8 m, so the
  // knee comes within ~3e-4 rad of dead straight at full stretch.
  flat.shank_length = std::hypot(flat.hip_offset_x, flat.hip_offset_y) +
                      flat.crank_length - flat.thigh_length + 1e-8;
  CHECK_THROWS_AS(validate_geometry(flat), ClosureViolation);

  CHECK_NOTHROW(validate_geometry(default_geometry()));
}
