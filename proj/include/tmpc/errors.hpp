#pragma once

#include <stdexcept>
#include <string>

namespace tmpc {

// Invalid configuration, file contents, or parameters. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure at runtime (divergence, all samples invalid). Exit code 1.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// State integration produced a non-finite value.
class IntegrationError : public NumericError {
 public:
  IntegrationError(const std::string& what, int step)
      : NumericError(what + " (step " + std::to_string(step) + ")"),
        step_index(step) {}
  int step_index;
};

}  // namespace tmpc
