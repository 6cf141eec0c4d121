#pragma once

#include <stdexcept>
#include <string>

namespace roomlayout {

/// Input violates a documented contract (bad ids, malformed files, size
/// mismatches). The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Input was well formed but the computation could not produce a result.
/// The CLI maps this to exit code 2.
class ComputationError : public std::runtime_error {
 public:
  explicit ComputationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace roomlayout
