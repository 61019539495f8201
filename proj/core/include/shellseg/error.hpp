#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace shellseg {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad argument or violated precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed or truncated serialized data. Carries the byte offset where
// parsing failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Loss or parameters went non-finite.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace shellseg
