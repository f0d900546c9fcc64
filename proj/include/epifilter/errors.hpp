#pragma once

#include <stdexcept>
#include <string>

namespace epifilter {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Non-finite or out-of-domain values passed to a numeric routine.
struct InvalidInputError : Error {
  using Error::Error;
};

/// Inconsistent or unusable configuration (bad bounds, short series, ...).
struct ConfigError : Error {
  using Error::Error;
};

/// Malformed input file (CSV structure, numeric cells, headers).
struct FormatError : Error {
  using Error::Error;
};

/// Requested entity does not exist (region, file, column).
struct NotFoundError : Error {
  using Error::Error;
};

/// Numerical failure (singular matrix, failed factorization).
struct NumericalError : Error {
  using Error::Error;
};

}  // namespace epifilter
