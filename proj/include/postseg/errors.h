#pragma once

#include <stdexcept>
#include <string>

namespace postseg {

/// Invalid configuration or flag combination.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File system or file-format failure.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data violates a contract (grid mismatch, label out of range, ...).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace postseg
