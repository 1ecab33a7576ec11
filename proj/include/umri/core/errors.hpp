#pragma once

#include <stdexcept>
#include <string>

namespace umri {

// Error taxonomy; the CLI maps these onto exit codes (see cli/commands.hpp).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid configuration or arguments (exit code 2).
struct ConfigError : Error {
  using Error::Error;
};

// Tensor/array shape disagreement (exit code 3).
struct ShapeError : Error {
  using Error::Error;
};

// Non-finite or otherwise invalid numeric data (exit code 3).
struct DataError : Error {
  using Error::Error;
};

// Malformed serialized file (exit code 4).
struct FormatError : Error {
  using Error::Error;
};

// Filesystem failure (exit code 4).
struct IoError : Error {
  using Error::Error;
};

}  // namespace umri
