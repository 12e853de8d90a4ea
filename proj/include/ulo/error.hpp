#pragma once

#include <stdexcept>
#include <string>

namespace ulo {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor shapes do not line up.
struct ShapeError : Error {
  using Error::Error;
};

// A forward op produced NaN/Inf, or a gradient went non-finite.
struct NumericError : Error {
  using Error::Error;
};

// Zero-length logical parameter vector: the kernel has collapsed.
struct DegenerateError : Error {
  using Error::Error;
};

// API misuse (non-scalar loss, init_logic on a fixed layer, step = 0, ...).
struct ContractError : Error {
  using Error::Error;
};

// Malformed input file (IDX, checkpoint, CSV).
struct FormatError : Error {
  using Error::Error;
};

// Bad run configuration (unknown keys, missing paths, invalid values).
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace ulo
