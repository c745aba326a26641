#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace dnas {

/// Precondition or shape violation on a domain object (bad config,
/// mismatched alpha, out-of-range index).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or unknown user configuration (files, registry names).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A referenced file is missing or cannot be read or written.
class FileError : public ConfigError {
 public:
  FileError(const std::string& what, std::string path)
      : ConfigError(what + ": " + path), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// A computation produced a non-finite value.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Enumeration refused because the space exceeds the guard limit.
class SpaceTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dnas
