#pragma once

#include <cstdint>
#include <random>

namespace ddnet {

// SplitMix64 finalizer. Used to derive independent stream seeds from
// (base seed, counter) so each replication owns its own generator.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t counter) noexcept {
  return mix64(mix64(seed) ^ mix64(counter + 0x632be59bd9b4e019ULL));
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::uint64_t counter) {
  return Rng(stream_seed(seed, counter));
}

}  // namespace ddnet
