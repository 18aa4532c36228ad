#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "hyperbasis/padic.hpp"

namespace hyperbasis::testing {

using padic::BigInt;

/// Deterministic RNG for property runs; every test fixes its own seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  std::int64_t uniform(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(eng_);
  }
  bool flip() { return uniform(0, 1) == 1; }
  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

/// Exhaustive modular inverse, the independent oracle for division tests.
inline std::int64_t brute_inverse_mod(std::int64_t a, std::int64_t m) {
  a = ((a % m) + m) % m;
  for (std::int64_t x = 1; x < m; ++x)
    if (a * x % m == 1) return x;
  return -1;
}

/// Brute-force square detection mod p^k by enumerating all squares.
inline bool brute_is_square_mod(std::int64_t u, std::int64_t mod) {
  u = ((u % mod) + mod) % mod;
  for (std::int64_t x = 0; x < mod; ++x)
    if (x * x % mod == u) return true;
  return false;
}

inline std::int64_t ipow(std::int64_t b, int e) {
  std::int64_t r = 1;
  while (e-- > 0) r *= b;
  return r;
}

}  // namespace hyperbasis::testing
