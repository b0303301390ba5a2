#include <atomic>
#include <cstdlib>
#include <cstring>

#include "ssmp/simd/kernels.hpp"

namespace ssmp::simd {

namespace {

Isa initial_isa() noexcept {
  const char* forced = std::getenv("SSMP_SIMD");
  if (forced != nullptr && std::strcmp(forced, "scalar") == 0) return Isa::scalar;
  return detected_isa();
}

std::atomic<Isa>& current() noexcept {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::avx2:
      return "avx2";
    case Isa::scalar:
      break;
  }
  return "scalar";
}

Isa detected_isa() noexcept {
#if SSMP_HAVE_AVX2_KERNELS
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return Isa::avx2;
#endif
  return Isa::scalar;
}

Isa active_isa() noexcept { return current().load(std::memory_order_relaxed); }

void set_isa(Isa isa) noexcept {
  if (isa == Isa::avx2 && detected_isa() != Isa::avx2) isa = Isa::scalar;
  current().store(isa, std::memory_order_relaxed);
}

#if SSMP_HAVE_AVX2_KERNELS
#define SSMP_DISPATCH(fn, ...) \
  return active_isa() == Isa::avx2 ? avx2::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__)
#else
#define SSMP_DISPATCH(fn, ...) return scalar::fn(__VA_ARGS__)
#endif

void affine(std::span<const double> x, double offset, double scale, std::span<double> out) {
  SSMP_DISPATCH(affine, x, offset, scale, out);
}

void exp_trapezoid(std::span<const double> t, std::span<const double> v, double rate,
                   std::span<double> out) {
  SSMP_DISPATCH(exp_trapezoid, t, v, rate, out);
}

void exp_harmonic_step(std::span<const double> t, std::span<const double> v, double rate,
                       std::span<double> out) {
  SSMP_DISPATCH(exp_harmonic_step, t, v, rate, out);
}

void prefix_sum(std::span<const double> in, double start, std::span<double> out) {
  SSMP_DISPATCH(prefix_sum, in, start, out);
}

Moments moments(std::span<const double> x) { SSMP_DISPATCH(moments, x); }

double abs_diff_sum(std::span<const double> a, std::span<const double> b) {
  SSMP_DISPATCH(abs_diff_sum, a, b);
}

std::size_t first_above(std::span<const double> x, double threshold) {
  SSMP_DISPATCH(first_above, x, threshold);
}

MinMax minmax(std::span<const double> x) { SSMP_DISPATCH(minmax, x); }

#undef SSMP_DISPATCH

}  // namespace ssmp::simd
