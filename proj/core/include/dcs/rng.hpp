#pragma once

#include <cstdint>

namespace dcs {

// SplitMix64 stream. All randomness in the library flows from a single
// user seed through named child streams (split(tag)), so outputs are
// reproducible across platforms and thread counts.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Independent child stream for a named consumer.
  Rng split(std::uint64_t tag) {
    Rng tmp(state_ ^ (tag * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL));
    return Rng(tmp.next_u64());
  }

 private:
  std::uint64_t state_;
};

}  // namespace dcs
