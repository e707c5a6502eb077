#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace scpw {

/// Identifier embedded in reports so runs state exactly which generator
/// produced them.
inline constexpr const char* rng_algorithm_id = "splitmix64+boxmuller/1";

/// SplitMix64 (Steele, Lea, Flood 2014). Tiny, fast, and splittable: the
/// whole Monte Carlo layer keys substreams off it so that serial and
/// parallel runs consume identical random numbers.
struct SplitMix64 {
  std::uint64_t state = 0;

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double strictly inside (0, 1).
  double next_unit() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }
};

/// Independent substream for a trial index: the index is folded through one
/// scramble round so consecutive trials do not share shifted state windows.
inline SplitMix64 substream(std::uint64_t seed, std::uint64_t index) {
  SplitMix64 seeder{seed + 0x9e3779b97f4a7c15ULL * index};
  return SplitMix64{seeder.next()};
}

/// Standard normal deviates via Box-Muller, pair-cached.
struct GaussianSampler {
  SplitMix64 rng;
  bool have_spare = false;
  double spare = 0.0;

  double next() {
    if (have_spare) {
      have_spare = false;
      return spare;
    }
    const double u1 = rng.next_unit();
    const double u2 = rng.next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    spare = r * std::sin(t);
    have_spare = true;
    return r * std::cos(t);
  }
};

}  // namespace scpw
