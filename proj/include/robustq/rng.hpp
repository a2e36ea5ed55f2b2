#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

namespace robustq {

/// One SplitMix64 output for the given input. Used for seeding and stream derivation.
std::uint64_t mix64(std::uint64_t x);

/// Seed of the `index`-th independent stream of a master seed:
///   mix64(master + (index + 1) * 0x9E3779B97F4A7C15).
/// The harness uses this scheme to derive per-run seeds.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// xoshiro256** generator seeded through SplitMix64.
///
/// Satisfies UniformRandomBitGenerator, but the sampling helpers below are
/// implemented here rather than through <random> distributions so that
/// streams are identical across standard libraries.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0);

  /// Generator for stream `index` of `master` (see derive_seed).
  static Rng stream(std::uint64_t master, std::uint64_t index);

  /// Child generator seeded from this one's next output. Advances this generator.
  Rng split();

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() { return next(); }
  result_type next();

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  /// Standard normal (Marsaglia polar method).
  double normal();
  /// Uniform integer in [0, n). n must be positive.
  std::size_t below(std::size_t n);
  /// Index drawn from a cumulative distribution (last entry treated as 1).
  std::size_t categorical(std::span<const double> cumulative);

  std::uint64_t seed() const { return seed_; }

 private:
  std::array<std::uint64_t, 4> state_{};
  std::uint64_t seed_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace robustq
