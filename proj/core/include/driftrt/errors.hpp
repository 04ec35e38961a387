#pragma once

#include <stdexcept>
#include <string>

namespace driftrt {

/// Bad model/design dimensions or malformed configuration.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Parameter values outside their admissible set (a1 >= a2, non-PD Sigma_B, ...).
class ParameterError : public std::runtime_error {
 public:
  explicit ParameterError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure during evaluation (non-finite likelihood, degenerate conditioning).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// File and data-format problems (CSV/JSON parsing, I/O).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace driftrt
