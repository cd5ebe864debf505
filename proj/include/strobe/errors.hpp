#pragma once

#include <stdexcept>

namespace strobe {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidDimension : public Error {
 public:
  using Error::Error;
};

/// A value failed one of its type invariants (Hermiticity, trace, positivity, unitarity).
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

/// The integrator produced a state outside the positive cone; usually dt is too large.
class IntegratorError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class RecordCorrupt : public Error {
 public:
  using Error::Error;
};

class UnsupportedDesign : public Error {
 public:
  using Error::Error;
};

class NoCrossing : public Error {
 public:
  using Error::Error;
};

class SingularFormula : public Error {
 public:
  using Error::Error;
};

/// Request rejected because it would be too expensive (e.g. D! enumeration for large D).
class Refused : public Error {
 public:
  using Error::Error;
};

}  // namespace strobe
