#pragma once

#include <stdexcept>
#include <string>

namespace dae {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible tensor shapes or feature widths.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation (log of 0, negative sigma, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration or usage. The CLI maps this to exit code 1.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data. The CLI maps this to exit code 2.
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace dae
