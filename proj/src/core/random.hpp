#pragma once

#include <cstdint>

namespace psl {

/// SplitMix64 finalizer. The one-way mix used for all seed derivation.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Counter-based uniform stream (SplitMix64). Draw c of a stream with base b
/// is mix64(b + c*golden), so a draw is fully determined by (base, counter).
/// Streams for distinct runs are derived by a one-way mix of (master_seed,
/// run index) and therefore never share state.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t base) : base_(base) {}

  static RandomStream for_run(std::uint64_t master_seed, std::uint64_t run) {
    return RandomStream(mix64(mix64(master_seed) ^ mix64(run ^ kRunSalt)));
  }

  /// Purpose-salted stream, e.g. one per graph-sequence window.
  static RandomStream keyed(std::uint64_t seed, std::uint64_t salt,
                            std::uint64_t index) {
    return RandomStream(mix64(mix64(seed) ^ mix64(salt) ^ mix64(index)));
  }

  std::uint64_t next_u64() {
    counter_ += 1;
    return mix64(base_ + counter_ * 0x9E3779B97F4A7C15ull);
  }

  /// Uniform draw in [0, 1) with 53 random bits.
  double next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  std::uint64_t base() const { return base_; }

 private:
  static constexpr std::uint64_t kRunSalt = 0x8BADF00Dull;
  std::uint64_t base_;
  std::uint64_t counter_ = 0;
};

}  // namespace psl
