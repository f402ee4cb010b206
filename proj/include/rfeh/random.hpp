#pragma once

// Seedable generator with a platform-independent output sequence.
// std::mt19937_64 and std::seed_seq are fully specified by the standard;
// the distribution step is done by hand because the standard distributions
// are not.

#include <cmath>
#include <cstdint>
#include <random>

namespace rfeh {

class Rng {
 public:
  /// Independent stream `stream` of the experiment seeded with `seed`.
  Rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    engine_.seed(seq);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform draw with the given mean and standard deviation
  /// (half-width sqrt(3) * stddev).
  double uniform_mean_std(double mean, double stddev) {
    const double half = std::sqrt(3.0) * stddev;
    return uniform(mean - half, mean + half);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace rfeh
