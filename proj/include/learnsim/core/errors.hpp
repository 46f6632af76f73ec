#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace learnsim {

// Shape or width mismatch between tensors or layers.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Caller broke a documented precondition (non-scalar loss, missing gradient...).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Bad configuration value; maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad or missing input data; maps to CLI exit code 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InputError : public DataError {
 public:
  using DataError::DataError;
};

class ValidationError : public DataError {
 public:
  using DataError::DataError;
};

class TruncationError : public DataError {
 public:
  using DataError::DataError;
};

class VersionError : public DataError {
 public:
  using DataError::DataError;
};

// A simulation produced non-finite values; carries the step where it happened.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::size_t step)
      : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

// Oracle generators failed to converge.
class GenerationError : public DivergenceError {
 public:
  using DivergenceError::DivergenceError;
};

}  // namespace learnsim
