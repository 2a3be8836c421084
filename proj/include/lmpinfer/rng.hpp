#pragma once

#include <cstdint>
#include <random>

namespace lmpinfer {

// Seeded random stream with reproducible sub-stream derivation.
//
// Draws are generated from raw mt19937_64 output rather than
// std::uniform_*_distribution so that the byte stream depends only on the
// seed, not on the standard-library implementation.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : base_(mix(seed)), engine_(base_) {}

  // Independent stream for sample `index`; stable across calls.
  RandomStream substream(std::uint64_t index) const {
    return from_base(mix(base_ ^ mix(index + 0x9E3779B97F4A7C15ULL)));
  }

  // Uniform draw in [lo, hi) with 53-bit resolution.
  double uniform(double lo, double hi) {
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }

  // Uniform integer in [0, n). Rejection sampling keeps it unbiased.
  std::uint64_t uniform_index(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = engine_();
    while (v >= limit) v = engine_();
    return v % n;
  }

  std::uint64_t next_u64() { return engine_(); }

 private:
  // splitmix64; decorrelates consecutive seeds and substream indices.
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static RandomStream from_base(std::uint64_t base) {
    RandomStream s(0);
    s.base_ = base;
    s.engine_.seed(base);
    return s;
  }

  std::uint64_t base_;
  std::mt19937_64 engine_;
};

}  // namespace lmpinfer
