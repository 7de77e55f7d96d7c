#pragma once

#include <cstdint>
#include <random>

namespace lma {

/// SplitMix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Seed of an independent sub-stream: splitmix64(base ^ splitmix64(stream)).
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(base ^ splitmix64(stream));
}

// All generation draws come from mt19937_64 seeded with a derived seed.
using Rng = std::mt19937_64;

}  // namespace lma
