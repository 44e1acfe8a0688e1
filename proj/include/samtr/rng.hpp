#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace samtr {

// Deterministic named RNG streams.  Every random decision in a run draws from
// a stream keyed by (master seed, stream name), so adding draws to one stream
// never perturbs another and replays are exact.  Distribution sampling is done
// in-house (bit shift for uniforms, Box-Muller for normals) because the
// std::*_distribution algorithms are implementation-defined and would break
// byte-identical replay across standard libraries.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view name)
      : engine_(mix(seed, fnv1a(name))) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Integer uniform on [0, n).  Rejection keeps it unbiased.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  double normal(double mean = 0.0, double stddev = 1.0) {
    // Box-Muller; the second variate is discarded so the stream state is a
    // pure function of the number of calls.
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  static std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
    return h;
  }

  // splitmix64 finalizer; decorrelates seed/name pairs.
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b | 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::mt19937_64 engine_;
};

}  // namespace samtr
