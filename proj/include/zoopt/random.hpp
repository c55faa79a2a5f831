#pragma once

#include <cstdint>
#include <random>

namespace zoopt {

using Rng = std::mt19937_64;

/// Identifiers of the independent sub-streams derived from one master seed.
enum class Stream : std::uint64_t {
  kNoise = 1,
  kDirections = 2,
  kFixture = 3,
};

namespace detail {

// SplitMix64 finalizer; a bijective mixer with good avalanche.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Seed of sub-stream `stream` under `master`. Distinct streams of the same
/// master, and equal streams of distinct masters, are decorrelated.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
  return detail::mix64(detail::mix64(master) ^ detail::mix64(stream + 0x632be59bd9b4e019ULL));
}

inline Rng make_stream(std::uint64_t master, Stream stream) {
  const std::uint64_t s = derive_seed(master, static_cast<std::uint64_t>(stream));
  std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                    static_cast<std::uint32_t>(static_cast<std::uint64_t>(stream))};
  return Rng(seq);
}

}  // namespace zoopt
