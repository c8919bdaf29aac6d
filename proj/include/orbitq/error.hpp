#pragma once

#include <stdexcept>
#include <string>

namespace orbitq {

// Bad input: malformed configuration, out-of-range knob, mismatched sizes.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical procedure could not deliver its contract (gauge fixing,
// eigensolve, step-size underflow, empty bracket, ...).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace orbitq
