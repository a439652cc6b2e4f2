#pragma once

#include <cstdint>
#include <random>

namespace hsicrf {

// All randomness in the library flows through one generator type so that a
// (data, config, seed) triple reproduces bit-identical results on rerun.
using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng{seed}; }

inline double uniform_real(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  return dist(rng);
}

// Standard normal draw. A fresh distribution per call keeps the stream
// independent of any cached spare value.
inline double normal(Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

// Uniform integer in [0, n).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  std::uniform_int_distribution<std::uint64_t> dist(0, n - 1);
  return dist(rng);
}

}  // namespace hsicrf
