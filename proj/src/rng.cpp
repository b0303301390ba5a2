#include "ssmp/rng.hpp"

namespace ssmp {

namespace {

// Ziggurat for the standard normal with 128 blocks (Marsaglia-Tsang layout,
// Doornik's variant that avoids integer/float correlation).
constexpr int kZigBlocks = 128;
constexpr double kZigR = 3.442619855899;
constexpr double kZigV = 9.91256303526217e-3;

struct ZigguratTables {
  std::array<double, kZigBlocks + 1> x{};
  std::array<double, kZigBlocks> ratio{};

  ZigguratTables() {
    double f = std::exp(-0.5 * kZigR * kZigR);
    x[0] = kZigV / f;
    x[1] = kZigR;
    x[kZigBlocks] = 0.0;
    for (int i = 2; i < kZigBlocks; ++i) {
      x[i] = std::sqrt(-2.0 * std::log(kZigV / x[i - 1] + f));
      f = std::exp(-0.5 * x[i] * x[i]);
    }
    for (int i = 0; i < kZigBlocks; ++i) ratio[i] = x[i + 1] / x[i];
  }
};

const ZigguratTables& zig() {
  static const ZigguratTables tables;
  return tables;
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept
    : seed_(seed), stream_id_(stream_id) {
  const std::uint64_t key = mix64(seed);
  for (std::uint64_t w = 0; w < 4; ++w) s_[w] = mix64(key ^ mix64(4 * stream_id + w));
  // xoshiro must not start from the all-zero state.
  if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 0x9E3779B97F4A7C15ULL;
}

RngStream RngStream::fork(std::uint64_t child_id) const noexcept {
  return RngStream(mix64(seed_) ^ mix64(~stream_id_), child_id);
}

std::uint64_t RngStream::below(std::uint64_t n) noexcept {
  // Lemire's nearly-divisionless bounded draw.
  std::uint64_t x = next_u64();
  __uint128_t m = static_cast<__uint128_t>(x) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = -n % n;
    while (low < threshold) {
      x = next_u64();
      m = static_cast<__uint128_t>(x) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double RngStream::normal() noexcept {
  const auto& t = zig();
  for (;;) {
    const std::uint64_t bits = next_u64();
    const auto block = static_cast<int>(bits & 0x7F);
    const double u = 2.0 * ((static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53) - 1.0;
    if (std::fabs(u) < t.ratio[block]) return u * t.x[block];
    if (block == 0) {
      double x;
      double y;
      do {
        x = std::log(uniform()) / kZigR;
        y = std::log(uniform());
      } while (-2.0 * y < x * x);
      return u < 0.0 ? x - kZigR : kZigR - x;
    }
    const double x = u * t.x[block];
    const double f0 = std::exp(-0.5 * (t.x[block] * t.x[block] - x * x));
    const double f1 = std::exp(-0.5 * (t.x[block + 1] * t.x[block + 1] - x * x));
    if (f1 + uniform() * (f0 - f1) < 1.0) return x;
  }
}

}  // namespace ssmp
