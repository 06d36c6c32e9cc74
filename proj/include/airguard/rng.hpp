#pragma once

#include <cstdint>
#include <random>

namespace airguard {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer, used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Generator for (seed, stream, index). Distinct triples give unrelated
/// sequences, so a block of work can be reproduced without replaying the
/// blocks before it.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
  return Rng(mix64(mix64(mix64(seed) ^ stream) + index));
}

}  // namespace airguard
