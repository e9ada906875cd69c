#pragma once

#include <cstdint>
#include <random>

namespace backbone {

// splitmix64 finalizer; used to mix seed components into independent streams.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic per-(seed, t, m) stream so subproblem fits can run under any
// schedule and still reproduce bit-identical results.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t t, std::uint64_t m) {
  return mix64(mix64(master ^ 0xa076'1d64'78bd'642fULL) + mix64(t) * 3 + mix64(m) * 7);
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
  return std::mt19937_64(mix64(seed));
}

}  // namespace backbone
