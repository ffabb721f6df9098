#pragma once

#include <stdexcept>
#include <string>

namespace tae {

// Error taxonomy mirrors the CLI exit codes: usage -> 2, data -> 3, numeric -> 4.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UsageError : Error {
  using Error::Error;
};

// Malformed files, invariant violations, shape mismatches.
struct DataError : Error {
  using Error::Error;
};

// NaN/Inf where finite values are required.
struct NumericError : Error {
  using Error::Error;
};

inline void check_data(bool ok, const std::string& msg) {
  if (!ok) throw DataError(msg);
}

inline void check_numeric(bool ok, const std::string& msg) {
  if (!ok) throw NumericError(msg);
}

}  // namespace tae
