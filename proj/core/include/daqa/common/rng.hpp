#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace daqa {

// All stochastic code draws from this engine through the helpers below rather
// than <random> distributions, whose output is implementation-defined.
using Rng = std::mt19937_64;

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Derives an independent stream seed from a master seed, a stream label and
/// up to two indices. Pure function; used for per-clip and per-split seeds.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                          std::uint64_t index = 0, std::uint64_t sub = 0);

/// Uniform double in [0, 1) with 53 random bits.
double uniform01(Rng& rng);

/// Uniform double in [lo, hi).
double uniform_real(Rng& rng, double lo, double hi);

/// Uniform integer in [0, n). n must be > 0.
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);

/// Uniform integer in [lo, hi] inclusive.
std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi);

/// Standard normal via Box-Muller (one value per call; no caching).
double standard_normal(Rng& rng);

/// Bernoulli(p).
bool bernoulli(Rng& rng, double p);

/// Fisher-Yates shuffle using uniform_index.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = uniform_index(rng, i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace daqa
