#pragma once

// Portable random source. The engine is std::mt19937_64, whose output sequence
// is fixed by the standard; every distribution below is implemented here so the
// same seed yields the same numbers with any standard library.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>

namespace elastic {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Derives an independent substream seed from a root seed and a path of ids,
// e.g. derive_seed(seed, {step, tenant}).
inline std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = splitmix64(root);
  for (std::uint64_t id : path) h = splitmix64(h ^ splitmix64(id + 0x632BE59BD9B4E019ULL));
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n) {
    // Rejection removes modulo bias.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return r % n;
  }

  double normal(double mean = 0.0, double stddev = 1.0) {
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    return mean + stddev * z;
  }

  // Poisson(mean) by Knuth's product method. Large means are split into chunks
  // (a sum of independent Poissons is Poisson) so exp(-chunk) never underflows.
  std::uint64_t poisson(double mean) {
    constexpr double kChunk = 30.0;
    std::uint64_t total = 0;
    while (mean > 0.0) {
      const double part = mean > kChunk ? kChunk : mean;
      mean -= part;
      const double floor = std::exp(-part);
      double prod = uniform();
      while (prod > floor) {
        ++total;
        prod *= uniform();
      }
    }
    return total;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace elastic
