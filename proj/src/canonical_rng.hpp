#pragma once

#include <random>

namespace lwssim::detail {

// Canonical double in [0, 1) from the top 53 bits of one engine draw. Used
// instead of uniform_real_distribution so streams are identical across
// standard libraries.
inline double canonical(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

}  // namespace lwssim::detail
