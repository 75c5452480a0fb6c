#pragma once

#include <stdexcept>
#include <string>

namespace econokit {

/// Raised when input data or a call violates an operation's precondition.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for configuration problems (bad flag values, unknown keys).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace econokit
