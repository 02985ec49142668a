#pragma once

#include <stdexcept>
#include <string>

namespace drcl {

// Every error thrown by the library derives from Error. The CLI maps the
// three families onto exit codes 2 (config), 3 (I/O and input data) and
// 4 (numeric failure).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

// Caller handed in arguments whose shapes or ranges violate a precondition.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Binary feature/label files.
enum class FormatErrorKind { kMalformedMagic, kTruncatedPayload, kDimensionOverflow };

class FormatError : public IoError {
 public:
  FormatError(FormatErrorKind kind, const std::string& what) : IoError(what), kind_(kind) {}
  FormatErrorKind kind() const noexcept { return kind_; }

 private:
  FormatErrorKind kind_;
};

// Manifest content that does not match the expected schema or breaks a
// dataset invariant (label out of range, row count mismatch, ...).
class SchemaError : public IoError {
 public:
  using IoError::IoError;
};

class InvariantError : public IoError {
 public:
  using IoError::IoError;
};

}  // namespace drcl
