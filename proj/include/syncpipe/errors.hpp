#pragma once

#include <stdexcept>
#include <string>

namespace syncpipe {

/// Raised when an input violates a structural invariant. `invariant()` is a
/// short stable tag ("negative time", "missing pair", ...) suitable for tests
/// and CLI diagnostics; `what()` carries the tag plus the offending detail.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string invariant, const std::string& detail)
      : std::runtime_error(invariant + ": " + detail),
        invariant_(std::move(invariant)) {}

  const std::string& invariant() const noexcept { return invariant_; }

 private:
  std::string invariant_;
};

/// A requested configuration has no feasible plan (e.g. more stages than layers).
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The brute-force oracle refused an instance or ran out of search budget.
class OracleLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The event simulator reached a state where queues are non-empty but nothing can fire.
class DeadlockError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace syncpipe
