#pragma once

#include <stdexcept>
#include <string>

namespace bpp {

/// Violated precondition or malformed input. The CLI maps this to exit 1.
struct invalid_parameter : std::invalid_argument {
  explicit invalid_parameter(const std::string& what)
      : std::invalid_argument(what) {}
};

/// Numerics gave up (quadrature not converging, series diverging, ...).
/// The CLI maps this to exit 3.
struct numeric_failure : std::runtime_error {
  explicit numeric_failure(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace bpp
