#pragma once

#include <stdexcept>
#include <string>

namespace sqmle {

// Error taxonomy. The CLI maps these onto exit codes:
// UsageError -> 1; DomainError, NumericError, ModelViolation,
// OptimizationError -> 2; McFailure -> 3.

/// Bad input from the caller: malformed files, unknown keys, wrong shapes.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Quadrature or iteration failed to reach the requested accuracy.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, double residual = 0.0)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// The model produced an inadmissible value, e.g. a non-positive scale.
class ModelViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OptimizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Too many Monte Carlo replicates failed.
class McFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sqmle
