#pragma once

#include <stdexcept>
#include <string>

namespace ncb {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input outside the mathematical domain of an operation.
struct DomainError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

// A quadrature or resolution requirement cannot be met.
struct AccuracyError : Error {
  using Error::Error;
};

struct NumericalError : Error {
  using Error::Error;
};

struct DivergenceError : Error {
  using Error::Error;
};

}  // namespace ncb
