#pragma once

#include <stdexcept>
#include <string>

namespace distgeom {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A stencil, kernel support or query point came too close to the chart
/// boundary or to an excluded point.
class BoundaryProximityError : public Error {
 public:
  using Error::Error;
};

/// A quadrature sample evaluated to a non-finite value.
class IntegrationPoisonedError : public Error {
 public:
  using Error::Error;
};

/// Geodesic shooting did not converge.
class NoGeodesicError : public Error {
 public:
  using Error::Error;
};

/// A geodesic left the chart domain during integration.
class DomainEscapeError : public Error {
 public:
  using Error::Error;
};

/// |det g| fell below the configured floor.
class DegenerateMetricError : public Error {
 public:
  using Error::Error;
};

/// An operation was asked for something outside its contract
/// (bad slot index, unsupported parameter dependence, ...).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Malformed or incomplete experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace distgeom
