#pragma once

#include <cstdint>

namespace tmpc {

// Counter-based pseudo-random stream (SplitMix64 core). Every consumer derives
// its stream from (seed, substream indices) so results never depend on the
// order in which parallel workers run.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(mix(seed)) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

// Derive an independent stream seed from a base seed and up to three indices.
inline std::uint64_t substream(std::uint64_t seed, std::uint64_t a,
                               std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = RngStream::mix(seed);
  s = RngStream::mix(s ^ (a + 0x9E3779B97F4A7C15ULL));
  s = RngStream::mix(s ^ (b + 0xBF58476D1CE4E5B9ULL));
  s = RngStream::mix(s ^ (c + 0x94D049BB133111EBULL));
  return s;
}

}  // namespace tmpc
