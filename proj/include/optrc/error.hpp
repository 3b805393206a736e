#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace optrc {

/// Broad failure category. The CLI maps these onto exit codes.
enum class ErrorCategory { config, numerical, io };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

/// Invalid parameters, precondition violations, bad layouts.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ErrorCategory::config, what) {}
};

class DimensionError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class RangeError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class LayoutError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class CapacityError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class BatchShapeError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorCategory::numerical, what) {}
};

/// Non-finite value met at a given integration or recursion step.
class DivergenceError : public NumericalError {
 public:
  DivergenceError(const std::string& what, std::int64_t step)
      : NumericalError(what + " at step " + std::to_string(step)), step_(step) {}

  std::int64_t step() const noexcept { return step_; }

 private:
  std::int64_t step_;
};

class DegenerateError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCategory::io, what) {}
};

}  // namespace optrc
