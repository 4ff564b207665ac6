#pragma once

#include <stdexcept>
#include <string>

namespace mdcn {

// Base class for all library errors. Catch this at the CLI boundary.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor/layer shape mismatch. Message names both offending shapes.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& msg) : Error(msg) {}
};

// File or stream problem (missing file, short read, bad PNG, ...).
class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

// Malformed checkpoint; carries the byte offset where parsing failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& msg, long long offset)
      : Error(msg + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  long long offset() const { return offset_; }

 private:
  long long offset_;
};

// Bad user configuration (unknown key, invalid value, empty dataset, ...).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Non-finite value detected during training.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg) : Error(msg) {}
};

}  // namespace mdcn
