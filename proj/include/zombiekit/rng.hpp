#pragma once

// Seed derivation and the project-wide RNG engine. Every stochastic stage
// derives its own seed from the run's root seed and a stage name, so stages
// can be re-run or re-ordered without perturbing each other's streams.

#include <cstdint>
#include <random>
#include <string_view>

namespace zk {

// FNV-1a 64-bit. `seed` is XOR-folded into the offset basis so the same
// byte string hashes differently under different seeds.
inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed = 0) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// splitmix64 finalizer: cheap avalanche so nearby inputs land far apart.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stage seed = mix(root seed, stage name). Stable across platforms.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view stage) {
  return splitmix64(root ^ fnv1a64(stage));
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(splitmix64(seed)); }

}  // namespace zk
