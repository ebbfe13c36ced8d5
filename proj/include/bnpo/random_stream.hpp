#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace bnpo {

/// Deterministic 64-bit random stream (xoshiro256**), usable as a
/// UniformRandomBitGenerator. Substreams are derived from a root seed and a
/// path of counters, so work split across threads draws the same numbers
/// regardless of scheduling.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed);

  /// Stream for `root` at counter path `path` (e.g. {step, question}).
  static RandomStream derive(std::uint64_t root,
                             std::initializer_list<std::uint64_t> path);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();

  /// Uniform double in (0, 1).
  double uniform_open();

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::array<std::uint64_t, 4> state_;
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace bnpo
