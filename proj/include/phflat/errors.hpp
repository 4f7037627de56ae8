#pragma once

#include <stdexcept>
#include <string>

namespace phflat {

// Base class for every failure raised by the library. Subclasses name the
// failure category so callers (and the CLI exit-code mapping) can dispatch.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or mismatched arguments (order mismatch, bad sizes, parse errors).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

class ParseError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

// A germ whose linear coefficient vanishes cannot be inverted.
class NonInvertibleError : public Error {
 public:
  using Error::Error;
};

// A jet is truncated below the order an invariant needs.
class InsufficientOrderError : public Error {
 public:
  using Error::Error;
};

// An operation's documented precondition does not hold. The sibling classes
// below are the specialised precondition failures.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class DegenerateError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class OrientationError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class NonHyperbolicError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class UnsupportedError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class ResonanceError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

// A bounded search ran out of candidates.
class SearchExhaustedError : public Error {
 public:
  using Error::Error;
};

// An orbit failed to reach the required neighbourhood within the iterate cap.
class ConnectivityError : public Error {
 public:
  using Error::Error;
};

// A modelled orbit or solution left its admissible chart / polyball.
class GeometryError : public Error {
 public:
  using Error::Error;
};

// A constructed map failed a quantitative sanity bound (e.g. lost monotonicity).
class MagnitudeError : public Error {
 public:
  using Error::Error;
};

// A numerical procedure failed to reach its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace phflat
