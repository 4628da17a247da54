#ifndef RANKEMB_RNG_HPP_
#define RANKEMB_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <random>

#include "rankemb/common.hpp"

namespace rankemb {

// splitmix64; used to derive independent stream seeds from (seed, tag) pairs
// so per-track / per-anchor generators are decorrelated and order-free.
inline std::uint64_t seed_mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t seed_mix(std::uint64_t seed, std::uint64_t tag) {
  return seed_mix(seed ^ seed_mix(tag));
}

inline std::uint64_t seed_mix(std::uint64_t seed, std::uint64_t a,
                              std::uint64_t b) {
  return seed_mix(seed_mix(seed, a), b);
}

// Deterministic RNG. std::mt19937_64 output is fully specified by the
// standard; the distributions below are hand-rolled because the standard
// library ones are implementation-defined and would break bit-reproducibility
// across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi], inclusive. Unbiased via rejection.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (lo > hi) throw ValidationError("uniform_int: empty range");
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(eng_());  // full range
    const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % span;
    std::uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return lo + static_cast<std::int64_t>(x % span);
  }

  // Standard normal, Box-Muller with one cached value.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double sigma) { return mean + sigma * normal(); }

 private:
  std::mt19937_64 eng_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace rankemb

#endif  // RANKEMB_RNG_HPP_
