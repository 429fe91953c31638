#pragma once

#include <stdexcept>
#include <string>

namespace vline {

/// Bad arguments, inconsistent shapes or invalid configuration.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// File system or format failures.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by the iterative solvers when an iterate or metric becomes non-finite.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ValidationError(message);
}

}  // namespace vline
