#pragma once

#include <cmath>
#include <functional>

#include "fescycle/errors.hpp"

namespace fescycle {

// Bisect f over [lo, hi] for a sign change, to absolute tolerance tol on the
// argument.  Requires f(lo) and f(hi) of opposite (or zero) sign.
template <typename F>
double bisect(F&& f, double lo, double hi, double tol) {
  double flo = f(lo);
  if (flo == 0.0) return lo;
  double fhi = f(hi);
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) {
    throw NoCrossing("bisect: no sign change over bracket");
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // bracket at floating-point resolution
    const double fmid = f(mid);
    if (fmid == 0.0) return mid;
    if ((fmid > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Maximize f over [lo, hi]: coarse grid scan followed by golden-section
// refinement of the best bracket.  Returns the argmax; tol is on the argument.
template <typename F>
double grid_golden_max(F&& f, double lo, double hi, int grid, double tol) {
  const double span = hi - lo;
  int best = 0;
  double fbest = f(lo);
  for (int i = 1; i <= grid; ++i) {
    const double x = lo + span * static_cast<double>(i) / grid;
    const double fx = f(x);
    if (fx > fbest) {
      fbest = fx;
      best = i;
    }
  }
  double a = lo + span * static_cast<double>(best > 0 ? best - 1 : 0) / grid;
  double b = lo + span * static_cast<double>(best < grid ? best + 1 : grid) / grid;
  constexpr double kInvPhi = 0.6180339887498949;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  const double x = 0.5 * (a + b);
  return f(x) >= fbest ? x : lo + span * static_cast<double>(best) / grid;
}

}  // namespace fescycle
