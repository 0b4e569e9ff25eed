#pragma once

#include <cstdint>
#include <random>

namespace tubelab {

/// mt19937_64 wrapped with a fixed bits-to-double mapping, so that streams are
/// reproducible across standard libraries (std::uniform_real_distribution is
/// implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return (eng_() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, bound) by rejection (bound > 0).
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = bound * (UINT64_MAX / bound);
    std::uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return x % bound;
  }

 private:
  std::mt19937_64 eng_;
};

/// Stateless 64-bit mix (splitmix64 finalizer); used to derive per-node
/// deterministic values from (seed, key) pairs.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline double mix_to_unit(std::uint64_t z) { return (mix64(z) >> 11) * 0x1.0p-53; }

}  // namespace tubelab
