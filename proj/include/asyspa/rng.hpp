#pragma once

// Deterministic splittable RNG used everywhere randomness is needed.
//
// All draws are derived from 64-bit integer state (splitmix64), and floating
// point values are built from the integer output, so a given seed produces
// the same stream on every platform.  Streams are derived from a root seed
// plus a small tag tuple (e.g. {node id, purpose}), which keeps per-node /
// per-edge sequences independent of each other and of consumption order.

#include <cmath>
#include <cstdint>

namespace asyspa {

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 significant bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi].
  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // Exponential with the given mean (mean <= 0 returns 0).
  double next_exponential(double mean) {
    if (mean <= 0.0) return 0.0;
    // 1 - u is in (0, 1], so the log is finite.
    return -mean * std::log(1.0 - next_unit());
  }

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

// Hash-combine a root seed with stream tags; feeding the result through one
// splitmix step decorrelates adjacent tags.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t tag_a,
                                   std::uint64_t tag_b = 0) {
  SplitMix64 mix(seed ^ (0x9e3779b97f4a7c15ull + tag_a * 0xff51afd7ed558ccdull +
                         tag_b * 0xc4ceb9fe1a85ec53ull));
  return mix.next_u64();
}

}  // namespace asyspa
