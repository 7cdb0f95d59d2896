#pragma once

#include <stdexcept>
#include <string>

namespace gapnet {

// Base class for every error raised by the library. The derived types name
// the failure category so callers (and the CLI) can react per category.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SizeError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Problem too large for the requested solver or memory budget.
class ResourceError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual, double lambda = -1.0)
      : Error(what), residual_(residual), lambda_(lambda) {}
  double residual() const { return residual_; }
  // Sweep parameter at which the solver failed, or -1 when unknown.
  double lambda() const { return lambda_; }

 private:
  double residual_;
  double lambda_;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ChecksumError : public Error {
 public:
  using Error::Error;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class OverflowError : public Error {
 public:
  using Error::Error;
};

}  // namespace gapnet
