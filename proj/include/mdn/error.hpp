#pragma once

#include <stdexcept>
#include <string>

namespace mdn {

// Base for all library errors. The CLI maps ValidationError to exit code 1
// and everything else to 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible tensor shapes for an operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// NaN or Inf produced by a computation.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration or argument value.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace mdn
