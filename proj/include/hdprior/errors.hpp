#pragma once

#include <stdexcept>
#include <string>

namespace hdprior {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value fell outside the domain of a density, link, or family.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Vector or matrix dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be invertible is not (rank-deficient design, singular information).
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// An iterative procedure failed to converge.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// A query fell outside the supported range (interpolation, grids).
class RangeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

/// Raised when the sampler cannot initialize or otherwise fails fatally.
class SamplerError : public Error {
 public:
  using Error::Error;
};

/// Raised when a normalizing-constant estimate did not converge.
class EvidenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace hdprior
