#pragma once

#include <stdexcept>
#include <string>

namespace mopinn {

// Invalid configuration, bad dimensions, malformed files. Maps to exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite losses or parameters during training. Maps to exit code 3.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mopinn
