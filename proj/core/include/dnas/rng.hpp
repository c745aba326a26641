#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace dnas {

/// Seeded generator. Uniform and normal draws are computed here rather than
/// through <random> distributions so that streams are identical across
/// standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal (Box-Muller, no cached second value).
  double normal();

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

/// Child seed from (master, role tag, iteration, index). splitmix64 over an
/// FNV-1a hash of the tag; stable across platforms and worker counts.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                          std::uint64_t iteration = 0, std::uint64_t index = 0);

}  // namespace dnas
