#pragma once

#include <stdexcept>
#include <string>

namespace sosmap {

// Invalid or inconsistent configuration / type invariants violated at construction.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Corrupt or unrecognized on-disk data (containers, checkpoints, CSV maps).
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Optimization produced non-finite values and had to abort.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace sosmap
