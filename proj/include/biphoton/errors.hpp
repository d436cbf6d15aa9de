#pragma once

#include <stdexcept>
#include <string>

namespace biphoton {

// Base of every error thrown by the library. Subclasses name the failure
// class so callers (and the CLI exit-code mapping) can tell them apart.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters, malformed configs, unit mismatches.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Sampling grid too coarse for the requested model.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

// Histogram bin wider than the signal it is meant to resolve.
class AliasingError : public Error {
 public:
  using Error::Error;
};

// Input contains no identifiable correlation peak.
class NoSignalError : public Error {
 public:
  using Error::Error;
};

// Not enough events to form an estimate (e.g. zero heralds).
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

// A fit was attempted on data without a fittable feature.
class FitFailure : public Error {
 public:
  using Error::Error;
};

// The optimizer ran but did not converge.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

// Non-uniform or non-square scan geometry.
class GeometryError : public Error {
 public:
  using Error::Error;
};

// Input carries no information for the requested transform.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

}  // namespace biphoton
