#pragma once

#include <cstdint>
#include <limits>

namespace monge {

/// Counter-based 64-bit generator: output n of stream (seed, stream) is a
/// fixed mixing function of (key, n). Streams with different ids are
/// independent and any stream can be derived without running another.
/// Satisfies UniformRandomBitGenerator, so it plugs into <random>.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix(mix(seed) ^ (stream * 0xD1B54A32D192ED03ull + 0x8CB92BA72F3D8DD7ull))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix(key_ + 0x9E3779B97F4A7C15ull * ++counter_); }

  std::uint64_t counter() const { return counter_; }
  /// Jump to an absolute position in the stream.
  void set_counter(std::uint64_t n) { counter_ = n; }

 private:
  // SplitMix64 finalizer.
  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace monge
