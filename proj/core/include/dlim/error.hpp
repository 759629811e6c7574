#pragma once

#include <stdexcept>
#include <string>

namespace dlim {

/// Invalid configuration or violated precondition. Maps to CLI exit code 2.
struct SpecError : std::invalid_argument {
  explicit SpecError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Evaluation point outside the allowed domain.
struct DomainError : SpecError {
  explicit DomainError(const std::string& msg) : SpecError(msg) {}
};

/// Numerical failure (singular system, divergence). Maps to CLI exit code 3.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConvergenceError : NumericError {
  explicit ConvergenceError(const std::string& msg) : NumericError(msg) {}
};

}  // namespace dlim
