#pragma once

#include <stdexcept>
#include <string>

namespace spde {

/// Raised for misuse that a caller can repair: malformed configuration,
/// violated preconditions, incompatible grids, broken normalization
/// certificates.  The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Raised when a computation fails at runtime: instability guards tripping,
/// iterative solvers not converging.  The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace spde
