#pragma once

#include <stdexcept>
#include <string>

namespace stencil_lab {

/// Invalid input: bad dimensions, out-of-range parameters, malformed files.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// A computation that cannot produce a meaningful result (singular system,
/// non-finite objective, active-set cycling).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace detail
}  // namespace stencil_lab
