#pragma once

#include <stdexcept>
#include <string>

namespace rwrs {

// Error taxonomy shared by the library and the CLI exit-code contract:
// usage/config errors map to exit 2, resource errors to exit 3.

// Caller passed something structurally wrong (dimension mismatch, bad
// arguments, malformed config).
class UsageError : public std::invalid_argument {
 public:
  explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

// Input is outside the mathematical domain of an operation (m < 1,
// gamma outside (0,1], non-positive-definite matrix, ...).
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// The request exceeds a memory/horizon budget. The message carries the
// suggested fallback when one exists.
class ResourceError : public std::runtime_error {
 public:
  explicit ResourceError(const std::string& what) : std::runtime_error(what) {}
};

// Internal consistency violation detected at runtime (coverage gap,
// accumulator overflow, broken invariant).
class IntegrityError : public std::logic_error {
 public:
  explicit IntegrityError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace rwrs
