#pragma once

#include <stdexcept>
#include <string>

namespace vins {

/// Raised when a kinematic expression hits a coordinate singularity
/// (1/cos(lat) near the poles).
class SingularityError : public std::domain_error {
 public:
  explicit SingularityError(const std::string& what) : std::domain_error(what) {}
};

/// Raised when a covariance or innovation matrix loses the properties the
/// filter relies on (symmetry, positive semi-definiteness, invertibility).
class NumericalFailure : public std::runtime_error {
 public:
  explicit NumericalFailure(const std::string& what) : std::runtime_error(what) {}
};

/// Raised for malformed configuration files or inconsistent scenario settings.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when an input or output file cannot be read or written.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace vins
