#pragma once

#include <stdexcept>
#include <string>

namespace fracctl {

// Base class of every error thrown by this library.
class FracError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Invalid user-supplied data. The message names the offending field.
class ValidationError : public FracError {
public:
  using FracError::FracError;
};

// An API precondition between library components was broken at the call site
// (mismatched grids, incompatible dimensions, out-of-order arguments).
class ContractError : public FracError {
public:
  using FracError::FracError;
};

// The request is outside the supported configuration envelope
// (e.g. Gramian machinery with order <= 1/2).
class UnsupportedConfigError : public FracError {
public:
  using FracError::FracError;
};

// An algorithm could not reach the requested accuracy. Carries the best
// partial value and the tracked error estimate.
class NumericalError : public FracError {
public:
  NumericalError(const std::string& what, double partial, double estimate)
      : FracError(what), partial_(partial), estimate_(estimate) {}
  double partial_value() const { return partial_; }
  double error_estimate() const { return estimate_; }

private:
  double partial_ = 0.0;
  double estimate_ = 0.0;
};

}  // namespace fracctl
