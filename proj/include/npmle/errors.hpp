#pragma once

#include <stdexcept>
#include <string>

namespace npmle {

/// Violation of a documented precondition: mismatched dimensions, an empty
/// dataset, weights off the simplex, and the like.
class ContractError : public std::invalid_argument {
 public:
  explicit ContractError(const std::string& what) : std::invalid_argument(what) {}
};

/// A configuration that cannot be honored: grid blowing past its cap, a
/// non-positive-definite noise covariance, an unreadable input file.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// Numerical breakdown during an otherwise valid computation, e.g. a mixture
/// likelihood underflowing to zero or a singular covariance factorization.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ContractError(msg);
}

inline void require_config(bool cond, const std::string& msg) {
  if (!cond) throw ConfigError(msg);
}

}  // namespace npmle
