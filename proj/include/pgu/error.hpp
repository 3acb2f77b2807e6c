#pragma once

#include <stdexcept>
#include <string>

namespace pgu {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or missing configuration (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Invalid input data: malformed CSV rows, out-of-grid coordinates (CLI exit code 3).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Binary container problems: magic mismatch, truncation, dimension mismatch.
class FormatError : public DataError {
 public:
  using DataError::DataError;
};

/// Linear-algebra failures that survive the jitter / neighbour-drop policies.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace pgu
