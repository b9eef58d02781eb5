#pragma once

#include <stdexcept>
#include <string>

namespace qprtm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of a function (non-finite, negative, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of an operation does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Parameters sit on (or within tolerance of) a Wood's anomaly.
class WoodAnomalyError : public Error {
 public:
  WoodAnomalyError(const std::string& what, long offending_index)
      : Error(what), offending_index_(offending_index) {}
  long offending_index() const noexcept { return offending_index_; }

 private:
  long offending_index_;
};

/// Field point coincides with a source image of the periodic Green's function.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// A linear solve failed to converge or the system was numerically singular.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double residual = -1.0)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Bad configuration text or values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Invalid or degenerate geometry.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Malformed data file.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace qprtm
