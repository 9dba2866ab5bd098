#pragma once

#include <stdexcept>
#include <string>

namespace monge {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failures. Inside a trajectory these are turned into divergences.
class NonFiniteEvaluation : public Error {
 public:
  using Error::Error;
};
class NonFiniteEnergy : public Error {
 public:
  using Error::Error;
};
class DegenerateDenominator : public Error {
 public:
  using Error::Error;
};
class DegenerateDeterminant : public Error {
 public:
  using Error::Error;
};

// Target construction / evaluation domain.
class NonPositiveDefinite : public Error {
 public:
  using Error::Error;
};
class OriginSingularity : public Error {
 public:
  using Error::Error;
};

// Diagnostics.
class ZeroVariance : public Error {
 public:
  using Error::Error;
};
class EmptyRange : public Error {
 public:
  using Error::Error;
};

// Samplers.
class InitialPointInvalid : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or flag combination (CLI exit code 1).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace monge
