#pragma once

#include <stdexcept>
#include <string>

namespace mb2d {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration: unknown keys, malformed values, missing checkpoints.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Bad or insufficient input data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Argument or dimension contract violated.
class ValidationError : public DataError {
 public:
  using DataError::DataError;
};

/// Index window outside the valid range.
class RangeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Non-finite loss during training.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace mb2d
