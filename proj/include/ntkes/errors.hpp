#pragma once

#include <stdexcept>
#include <string>

namespace ntkes {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent vector or matrix dimensions.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of a mathematical function.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Dataset violates a structural requirement (e.g. coincident covariates).
class InvalidDataset : public Error {
 public:
  using Error::Error;
};

/// Configuration rejected before any computation starts.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver failed to converge.
class NumericalFailure : public Error {
 public:
  NumericalFailure(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t step)
      : Error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ntkes
