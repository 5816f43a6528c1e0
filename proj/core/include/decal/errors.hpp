#pragma once

#include <stdexcept>
#include <string>

namespace decal {

/// Raised when an argument violates a documented precondition
/// (bad dimensions, non-finite values, out-of-range parameters, ...).
class invalid_input_error : public std::invalid_argument {
public:
  explicit invalid_input_error(const std::string& what)
      : std::invalid_argument(what) {}
};

/// Raised when an exact/enumeration path is asked to handle an instance
/// outside its supported size envelope.
class unsupported_instance_error : public std::runtime_error {
public:
  explicit unsupported_instance_error(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace decal
