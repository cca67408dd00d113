#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace recon {

/// Counter-based normal generator: draw k of stream `seed` is a pure
/// function of (seed, k), so results do not depend on call order, thread
/// scheduling or the standard library's distribution implementations.
///
/// Uniforms come from the SplitMix64 finalizer applied to the mixed seed
/// xor an odd multiple of the counter; normals use the Box-Muller cosine branch
/// on uniforms 2k and 2k+1.
class CounterNormal {
 public:
  explicit CounterNormal(std::uint64_t seed) : seed_(seed) {}

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in (0, 1), never exactly 0.
  double uniform(std::uint64_t counter) const {
    const std::uint64_t bits = mix(mix(seed_) ^ (counter * 0xd1b54a32d192ed03ULL));
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal draw number k.
  double normal(std::uint64_t k) const {
    const double u1 = uniform(2 * k);
    const double u2 = uniform(2 * k + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t seed_;
};

}  // namespace recon
