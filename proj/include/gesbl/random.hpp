#pragma once

#include <cstdint>
#include <random>

namespace gesbl {

using Rng = std::mt19937_64;

/// Purpose tags for per-run sub-seeds. Values are part of the on-disk
/// reproducibility contract; do not renumber.
enum class SeedPurpose : std::uint64_t {
  Network = 1,
  Input = 2,
  Noise = 3,
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// sub_seed = mix(mix(mix(master) ^ run) ^ purpose). Independent streams per
/// (run, purpose) pair, stable across platforms.
constexpr std::uint64_t sub_seed(std::uint64_t master, std::uint64_t run,
                                 SeedPurpose purpose) noexcept {
  return mix64(mix64(mix64(master) ^ run) ^ static_cast<std::uint64_t>(purpose));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace gesbl
