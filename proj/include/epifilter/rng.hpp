#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace epifilter {

/// splitmix64 mixing step; used to derive independent substream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic RNG wrapper. Gaussian draws use an explicit Box-Muller
/// transform (no cached spare) so the byte-level sequence is identical
/// across standard libraries, which std::normal_distribution does not
/// guarantee.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  /// Substream with a seed derived from (seed, index); streams for distinct
  /// indices are independent and order-insensitive.
  static Rng substream(std::uint64_t seed, std::uint64_t index) {
    return Rng(splitmix64(seed ^ splitmix64(index + 0x51ed2701a7b5c3f9ULL)));
  }

  /// Uniform in (0, 1]; never returns 0 so log() is always finite.
  double uniform() {
    return (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;
  }

  double gaussian() {
    double u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

  std::uint64_t next_u64() { return eng_(); }

 private:
  std::mt19937_64 eng_;
};

}  // namespace epifilter
