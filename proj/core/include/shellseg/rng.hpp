#pragma once

#include <cstdint>
#include <initializer_list>
#include <cmath>
#include <random>
#include <utility>

namespace shellseg {

using Rng = std::mt19937_64;

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from a base seed and a path of
// indices, e.g. (seed, epoch, scene). Order of the path matters.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix64(seed);
  for (auto p : path) s = mix64(s ^ mix64(p + 0x632BE59BD9B4E019ull));
  return s;
}

// Uniform integer in [0, n) without the implementation-defined behaviour of
// std::uniform_int_distribution, so streams are portable across libraries.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = Rng::max() - Rng::max() % n;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

// Standard normal via Box-Muller (one draw per call).
inline double standard_normal(Rng& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

template <typename It>
void shuffle(It first, It last, Rng& rng) {
  const auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = uniform_index(rng, i);
    std::swap(first[i - 1], first[j]);
  }
}

}  // namespace shellseg
