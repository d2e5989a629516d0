#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace bargain {

// 64-bit FNV-1a. Used for request digests and derived seeds.
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);

// Minimal deterministic generator with identical output on every platform.
// The standard <random> distributions are implementation-defined, which
// would break byte-identical replay across toolchains.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // [0, 1)
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Inclusive bounds.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(next() % span);
  }

  bool coin_flip() { return (next() & 1) != 0; }

 private:
  std::uint64_t state_;
};

// Seed for one cell of a campaign: hash of the base seed and the cell labels,
// so any cell is re-runnable in isolation.
std::uint64_t derive_seed(std::uint64_t base,
                          std::initializer_list<std::string_view> parts);

}  // namespace bargain
