#pragma once

#include <stdexcept>
#include <string>

namespace ivqr {

// Broad failure classes; the CLI maps these onto exit codes.
enum class ErrorCategory { kConfig, kData, kNumerical };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, std::string kind, const std::string& message)
      : std::runtime_error(message), category_(category), kind_(std::move(kind)) {}

  ErrorCategory category() const noexcept { return category_; }
  // Short machine-readable tag, e.g. "singular-jacobian".
  const std::string& kind() const noexcept { return kind_; }

 private:
  ErrorCategory category_;
  std::string kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message, std::string kind = "config")
      : Error(ErrorCategory::kConfig, std::move(kind), message) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& message, std::string kind = "data")
      : Error(ErrorCategory::kData, std::move(kind), message) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& message, std::string kind = "numerical")
      : Error(ErrorCategory::kNumerical, std::move(kind), message) {}
};

// Q'Q (or Γ'Γ) too close to singular to invert.
class SingularJacobianError : public NumericalError {
 public:
  SingularJacobianError(double lambda_min, int iteration, const std::string& message)
      : NumericalError(message, "singular-jacobian"),
        lambda_min_(lambda_min),
        iteration_(iteration) {}

  double lambda_min() const noexcept { return lambda_min_; }
  // 1-based iteration index; 0 when raised outside an iteration.
  int iteration() const noexcept { return iteration_; }

 private:
  double lambda_min_;
  int iteration_;
};

}  // namespace ivqr
