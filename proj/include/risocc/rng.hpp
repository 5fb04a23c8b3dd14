#pragma once

#include <complex>
#include <cstdint>
#include <numbers>
#include <random>

namespace risocc {

using Rng = std::mt19937_64;

/// Independent random streams carved out of one master seed.
enum class Stream : std::uint64_t {
  Users = 1,
  FarField = 2,
  Symbols = 3,
  Noise = 4,
  OptimizerInit = 5,
  RandomBaseline = 6,
  Instance = 7,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Counter-based split: stream (trial, kind) depends only on its coordinates,
// so any single trial can be regenerated without replaying the others.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t trial, Stream kind) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ (trial * 0xD1B54A32D192ED03ULL));
  h = splitmix64(h ^ static_cast<std::uint64_t>(kind));
  return h;
}

inline Rng make_rng(std::uint64_t master, std::uint64_t trial, Stream kind) {
  return Rng{derive_seed(master, trial, kind)};
}

/// Circularly-symmetric complex Gaussian with unit variance.
inline std::complex<double> complex_normal(Rng& rng) {
  std::normal_distribution<double> half{0.0, std::numbers::sqrt2 / 2.0};
  const double re = half(rng);
  const double im = half(rng);
  return {re, im};
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>{lo, hi}(rng);
}

}  // namespace risocc
