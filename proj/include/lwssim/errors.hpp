#pragma once

#include <stdexcept>
#include <string>

namespace lwssim {

// File could not be read or written.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File was readable but is not in a supported format.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Requested configuration has no analytic-gradient path.
struct UnsupportedConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An optimization produced a non-finite loss.
struct DivergenceError : std::runtime_error {
  int step;
  explicit DivergenceError(int step_)
      : std::runtime_error("loss became non-finite at step " + std::to_string(step_)),
        step(step_) {}
};

}  // namespace lwssim
