#ifndef PDMP_ERRORS_HPP
#define PDMP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace pdmp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid model parameters or inconsistent model components.
class ModelError : public Error {
 public:
  using Error::Error;
};

/// A state left the state space by more than the integrator tolerance.
class DomainExitError : public ModelError {
 public:
  using ModelError::ModelError;
};

/// A sampler gave up after its attempt cap.
class SamplerError : public Error {
 public:
  using Error::Error;
};

/// The hazard target was not reached before the internal cap time.
class HorizonExhaustedError : public Error {
 public:
  using Error::Error;
};

/// phi exceeded the declared thinning bound along a flow.
class ThinningBoundError : public Error {
 public:
  using Error::Error;
};

/// A trajectory hit its jump cap before its horizon.
class ExplosionError : public Error {
 public:
  using Error::Error;
};

/// Required derivative information is unavailable.
class DifferentiabilityError : public Error {
 public:
  using Error::Error;
};

/// Quadrature cannot bound a truncated tail.
class TruncationError : public Error {
 public:
  using Error::Error;
};

/// Malformed evaluation grid or spec.
class GridError : public Error {
 public:
  using Error::Error;
};

/// Malformed experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace pdmp

#endif  // PDMP_ERRORS_HPP
