#pragma once

#include <stdexcept>
#include <string>

namespace cvqkd {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad user-supplied configuration (file, CLI flag, schema violation).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// Precondition violation on an operation input.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& msg) : Error(msg) {}
};

/// Code or encoder construction failed (infeasible girth, rank-deficient H).
class ConstructionError : public Error {
 public:
  explicit ConstructionError(const std::string& msg) : Error(msg) {}
};

/// Channel parameter estimation failed (degenerate input, block too small).
class EstimationError : public Error {
 public:
  explicit EstimationError(const std::string& msg) : Error(msg) {}
};

/// Classical-channel protocol violation (e.g. digest length mismatch).
class ProtocolError : public Error {
 public:
  explicit ProtocolError(const std::string& msg) : Error(msg) {}
};

/// A covariance matrix is not a valid Gaussian quantum state.
class PhysicalityError : public Error {
 public:
  explicit PhysicalityError(const std::string& msg) : Error(msg) {}
};

}  // namespace cvqkd
