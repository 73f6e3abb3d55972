#pragma once

#include <cstdint>
#include <random>

namespace graf {

/// Every stochastic step draws from derive_seed(config_seed, stage, index).
/// The stage tag keeps streams of different steps apart; index separates
/// repeats, epochs or restarts inside one stage.
enum class SeedStage : std::uint64_t {
  Split = 0x5101,
  AttentionInit = 0xA701,
  AttentionDropout = 0xA702,
  GcnInit = 0x6C01,
  GcnDropout = 0x6C02,
  Elimination = 0xE101,
  KMeans = 0x4B01,
  FinalRepeat = 0xF101,
  SelectionRepeat = 0x5E01,
};

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, SeedStage stage, std::uint64_t index = 0) {
  return mix64(mix64(base ^ static_cast<std::uint64_t>(stage)) + index);
}

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) built from the top 53 bits, independent of the
/// standard library's distribution implementation.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

/// Fisher-Yates with uniform01 so the permutation is portable across libraries.
template <class It>
void shuffle(It first, It last, Rng& rng) {
  const auto n = last - first;
  for (auto i = n - 1; i > 0; --i) {
    auto j = static_cast<decltype(i)>(uniform01(rng) * static_cast<double>(i + 1));
    if (j > i) j = i;
    std::swap(first[i], first[j]);
  }
}

}  // namespace graf
