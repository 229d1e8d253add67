#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace neuroid {

/// 64-bit FNV-1a; stable across platforms, used to fold string keys into seeds.
std::uint64_t fnv1a(std::string_view text) noexcept;

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives an independent stream seed from a root seed and a path of keys,
/// e.g. derive_seed(seed, {fnv1a(user), fold}). Order of keys matters.
std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> keys) noexcept;

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t root, std::initializer_list<std::uint64_t> keys) {
  return Rng(derive_seed(root, keys));
}

/// Uniform integer in [0, n). Implemented locally so results do not depend on
/// the standard library's distribution algorithms.
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);

/// Uniform real in [0, 1).
double uniform01(Rng& rng);

/// Standard normal via Box-Muller (library-independent).
double standard_normal(Rng& rng);

/// Fisher-Yates shuffle driven by uniform_index.
template <class It>
void shuffle(It first, It last, Rng& rng) {
  const auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = uniform_index(rng, i);
    std::swap(first[i - 1], first[j]);
  }
}

}  // namespace neuroid
