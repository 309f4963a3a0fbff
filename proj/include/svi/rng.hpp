#pragma once

#include <cmath>
#include <cstdint>

namespace svi {

// SplitMix64 (Vigna 2015; the splitting engine of Java's SplittableRandom).
// The state is a plain counter advanced by a fixed odd stride; the output is
// a bijective finalizer of that counter, so streams derived from distinct
// keys never overlap. All randomness in the library flows through explicit
// instances of this engine -- there is no hidden global state.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~0ull; }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ull;
    return finalize(state_);
  }

  // Avalanching finalizer; maps the raw counter to the output word.
  static std::uint64_t finalize(std::uint64_t x) {
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  // Independent child stream keyed by `index`. The parent is not advanced,
  // so derivation commutes with drawing and is reproducible by index alone.
  SplitMix64 split(std::uint64_t index) const {
    return SplitMix64(
        finalize(state_ ^ finalize(0xd1b54a32d192ed03ull * (index + 1))));
  }

 private:
  std::uint64_t state_;
};

using Rng = SplitMix64;

// Stream seed for replication (or batch-draw) `index` under `master`.
// A pure function of (master, index): replication r keeps its stream when
// the total replication count changes.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return SplitMix64::finalize(
      master ^ SplitMix64::finalize(index * 0x9e3779b97f4a7c15ull + 0x94d049bb133111ebull));
}

// Uniform double in [0, 1) with a full 53-bit mantissa.
inline double uniform01(Rng& rng) { return (rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// Standard normal pair by the Marsaglia polar method. Kept in-repo (rather
// than std::normal_distribution) so traces are bit-reproducible across
// standard libraries.
inline void standard_normal_pair(Rng& rng, double& a, double& b) {
  double u, v, s;
  do {
    u = 2.0 * uniform01(rng) - 1.0;
    v = 2.0 * uniform01(rng) - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double r = std::sqrt(-2.0 * std::log(s) / s);
  a = u * r;
  b = v * r;
}

inline double standard_normal(Rng& rng) {
  double a, b;
  standard_normal_pair(rng, a, b);
  return a;
}

}  // namespace svi
