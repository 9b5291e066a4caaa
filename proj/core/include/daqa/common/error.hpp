#pragma once

#include <stdexcept>
#include <string>

namespace daqa {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file could not be opened, read or parsed.
class LoadError : public Error {
 public:
  using Error::Error;
};

/// Input parsed but violates a structural rule (unknown id, bad placeholder, ...).
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Tensor shapes are incompatible with an operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Dataset generation could not satisfy its constraints or tripped a consistency check.
class GenerationError : public Error {
 public:
  using Error::Error;
};

/// A numeric routine produced NaN/Inf.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace daqa
