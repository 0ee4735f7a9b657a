#pragma once

#include <stdexcept>
#include <string>

namespace rrw {

// Raised when an operation is called outside its domain (non-normalized lattice
// law, wrong dimensions, degenerate support, ...). The CLI maps it to exit code 2.
class PreconditionError : public std::invalid_argument {
 public:
  explicit PreconditionError(const std::string& what) : std::invalid_argument(what) {}
};

// Malformed configuration input.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw PreconditionError(what);
}

}  // namespace rrw
