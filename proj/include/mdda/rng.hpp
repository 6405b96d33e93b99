#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>

namespace mdda {

/// splitmix64 finaliser step; used for seeding and stream derivation.
std::uint64_t splitmix64(std::uint64_t& state);

/// Child seed for the stream identified by `path` under `seed`.
/// Different paths give statistically independent streams.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

/// Parses a decimal or 0x-prefixed hexadecimal 64-bit seed.
std::uint64_t parse_seed(const std::string& text);

/// xoshiro256** generator with a Box-Muller normal transform.
///
/// The whole stream is specified here (seeding via splitmix64, 53-bit
/// uniforms, Box-Muller pairs with the sine variate cached), so a seed
/// reproduces the same values on any platform with IEEE doubles and a
/// correctly rounded libm.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  /// Uniform in [0,1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);
  /// Standard normal.
  double normal();

 private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace mdda
