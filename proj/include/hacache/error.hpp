#pragma once

#include <stdexcept>
#include <string>

namespace hacache {

/// Invalid or inconsistent configuration (length mismatch, unknown preset,
/// malformed config document).
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// Input outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// A search or sweep whose size exceeds the configured cap.
class SizeError : public std::length_error {
 public:
  explicit SizeError(const std::string& what) : std::length_error(what) {}
};

}  // namespace hacache
