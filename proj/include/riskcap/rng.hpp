#pragma once

#include <cmath>
#include <cstdint>

// Reproducible random number generation.
//
// Every stochastic routine in this library draws from a Stream obtained via
// make_stream(master_seed, key...). Streams are xoshiro256++ 1.0 generators
// seeded through splitmix64, and all variates (uniform, exponential, normal,
// Poisson) are produced by the inversion routines below rather than the
// standard-library distributions, so output is byte-stable across compilers
// and independent of how work is divided among threads.

namespace riskcap {

inline std::uint64_t splitmix64_next(std::uint64_t& s) {
  s += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// One round of splitmix64 mixing, used to fold stream keys into a seed.
inline std::uint64_t mix_key(std::uint64_t seed, std::uint64_t key) {
  std::uint64_t s = seed ^ (key + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
  return splitmix64_next(s);
}

// xoshiro256++ 1.0 (Blackman/Vigna).
class Stream {
 public:
  explicit Stream(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64_next(sm);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on (0,1), strictly interior so inversion sampling never hits 0 or 1.
  double uniform01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double exponential(double rate) { return -std::log1p(-uniform01()) / rate; }

  double normal(double mean, double sd) { return mean + sd * normal_inverse_cdf(uniform01()); }

  // Count of unit-exponential arrivals within [0, mean]; Poisson(mean).
  // Safe for any mean (no exp(-mean) underflow).
  std::uint32_t poisson(double mean) {
    std::uint32_t count = 0;
    double acc = exponential(1.0);
    while (acc <= mean) {
      ++count;
      acc += exponential(1.0);
    }
    return count;
  }

  // Index k with probability weights[k] / sum(weights).
  int categorical(const double* weights, int n) {
    double total = 0.0;
    for (int k = 0; k < n; ++k) total += weights[k];
    double target = uniform01() * total;
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
      acc += weights[k];
      if (target < acc) return k;
    }
    return n - 1;
  }

  // Standard normal quantile, rational approximation AS 241 (PPND16),
  // accurate to ~1e-16 on (0,1).
  static double normal_inverse_cdf(double p);

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t state_[4];
};

// Derives an independent substream from a master seed and up to three keys.
inline Stream make_stream(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0) {
  std::uint64_t s = mix_key(master, a);
  s = mix_key(s, b);
  s = mix_key(s, c);
  return Stream(s);
}

}  // namespace riskcap
