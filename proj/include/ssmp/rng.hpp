#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace ssmp {

/// SplitMix64 finalizer. Used for stream derivation only.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/**
 * Reproducible random stream identified by (seed, stream_id).
 *
 * The generator is xoshiro256++. Its 256-bit state is derived from the pair
 * by a counter construction: word w of the state is
 *
 *     mix64(mix64(seed) ^ mix64(4 * stream_id + w))
 *
 * so the draw sequence depends on nothing but the two 64-bit identifiers and
 * integer arithmetic. Derived streams (`fork`) reuse the same construction
 * with the parent's mixed key as seed.
 *
 * Continuous variates are built from the raw 64-bit output with our own
 * samplers (no <random> distributions, whose output is implementation
 * defined).
 */
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  /// Child stream, independent of this one and of other children.
  RngStream fork(std::uint64_t child_id) const noexcept;

  std::uint64_t next_u64() noexcept {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept;

  double normal() noexcept;

  /// Exponential with the given rate; +inf when rate is 0.
  double exponential(double rate) noexcept {
    if (rate <= 0.0) return std::numeric_limits<double>::infinity();
    return -std::log(uniform()) / rate;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::array<std::uint64_t, 4> s_;
};

/// Same as constructing RngStream(seed, stream_id); kept as the named entry point.
inline RngStream rng_fork(std::uint64_t seed, std::uint64_t stream_id) noexcept {
  return RngStream(seed, stream_id);
}

}  // namespace ssmp
