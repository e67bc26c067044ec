#pragma once

#include <stdexcept>
#include <string>

namespace akd {

// Base for every error raised by the library. The CLI maps the subclasses
// onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not fit the operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A scalar parameter is outside its admissible range (T <= 0, k <= 0, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// NaN/inf inputs or a degenerate normalizer.
class NumericError : public Error {
 public:
  using Error::Error;
};

// API misuse: non-scalar loss, unregistered parameter, length mismatch.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Input data violates its schema (label out of range, unnormalized target).
class DataError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed text input; the message carries file and line.
class ParseError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace akd
