#pragma once

#include <cstdint>
#include <random>

namespace exdyn {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of replicate k: mix64(master XOR mix64(k)). Stable across releases.
constexpr std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t k) {
  return mix64(master ^ mix64(k));
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

}  // namespace exdyn
