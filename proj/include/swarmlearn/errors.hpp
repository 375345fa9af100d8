#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace swarmlearn {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input, malformed files, inconsistent shapes. CLI exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Anything that went numerically wrong at run time. CLI exit code 3.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class IntegrationError : public NumericalError {
 public:
  IntegrationError(std::size_t step, const std::string& what)
      : NumericalError("integration failed at step " + std::to_string(step) + ": " + what),
        step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

class SingularConfiguration : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DivergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace swarmlearn
