#pragma once

#include <stdexcept>
#include <string>

namespace fescycle {

// Base class for every structured failure raised by the library.  Each named
// subtype corresponds to one failure mode of a module contract so callers can
// catch precisely.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Leg chain cannot close (triangle inequality fails) or closes with less than
// the required knee-angle margin somewhere on the crank circle.
class ClosureViolation : public Error {
 public:
  using Error::Error;
};

// Knee angle at 0 or pi within tolerance: the transfer-ratio denominator
// vanishes.
class SingularConfiguration : public Error {
 public:
  using Error::Error;
};

// Requested stimulation threshold is not below the peak torque-transfer
// magnitude, so no controlled region would exist.
class EpsilonTooLarge : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent configuration input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Controller gains fail the certified stability inequalities.
class GainConditionViolated : public Error {
 public:
  using Error::Error;
};

// Growth-rate discriminant is non-positive; the off-phase escape machinery is
// undefined for these constants.
class NegativeA3 : public Error {
 public:
  using Error::Error;
};

// Requested horizon reaches or exceeds the finite escape time of the
// uncontrolled growth envelope.
class EscapeTimeExceeded : public Error {
 public:
  using Error::Error;
};

// Trajectory demands are incompatible with the requested dwell-time bound.
class InfeasibleTrajectory : public Error {
 public:
  using Error::Error;
};

// Root bracketing failed: no sign change over the probed range.
class NoCrossing : public Error {
 public:
  using Error::Error;
};

// A claimed bound was violated by an independent sampling re-check.
class VerificationFailure : public Error {
 public:
  using Error::Error;
};

// A value-type invariant does not hold.
class ValidationFailure : public Error {
 public:
  using Error::Error;
};

// A fixed-point coefficient degenerates to zero; the quadratic has no
// informative root.
class DegenerateCoefficient : public Error {
 public:
  using Error::Error;
};

// Fixed-point discriminant is negative: no real ultimate bound exists for
// these constants and dwell times.
class ComplexRoot : public Error {
 public:
  using Error::Error;
};

// Simulated error norm exceeded the runaway threshold.
class EscapeDetected : public Error {
 public:
  using Error::Error;
};

// Crank failed to make forward progress through an uncontrolled region.
class NonForwardProgress : public Error {
 public:
  using Error::Error;
};

}  // namespace fescycle
