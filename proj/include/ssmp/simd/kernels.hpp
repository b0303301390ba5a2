#pragma once

// Data-parallel inner loops shared by the path transforms and the Monte-Carlo
// reductions. Every kernel has a portable scalar reference and an AVX2+FMA
// variant; the variant is picked once at runtime from CPUID and can be forced
// with SSMP_SIMD=scalar in the environment or set_isa().
//
// Kernels that only compare or select (first_above, minmax) and the affine map
// are bit-identical across variants. Kernels that accumulate or evaluate exp
// agree with the reference to a few ulps per element.

#include <cstddef>
#include <span>
#include <string_view>

namespace ssmp::simd {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa) noexcept;

/// Best variant the running CPU supports.
Isa detected_isa() noexcept;

/// Variant used by the dispatching entry points below.
Isa active_isa() noexcept;

/// Force a variant. Requests the CPU cannot run fall back to scalar.
void set_isa(Isa isa) noexcept;

struct Moments {
  double sum = 0.0;
  double sum_sq = 0.0;
};

struct MinMax {
  double min = 0.0;
  double max = 0.0;
};

/// out[i] = offset + scale * x[i]. Sizes must match.
void affine(std::span<const double> x, double offset, double scale, std::span<double> out);

/// Trapezoid increments of exp(rate * v) against t:
/// out[i] = (t[i+1] - t[i]) * (exp(rate v[i]) + exp(rate v[i+1])) / 2,
/// out.size() == t.size() - 1.
void exp_trapezoid(std::span<const double> t, std::span<const double> v, double rate,
                   std::span<double> out);

/// Inverse of the trapezoid step above: with f = exp(rate v),
/// out[i] = (t[i+1] - t[i]) * 2 / (f[i] + f[i+1]).
void exp_harmonic_step(std::span<const double> t, std::span<const double> v, double rate,
                       std::span<double> out);

/// Inclusive running sum starting from `start`: out[i] = start + in[0] + ... + in[i].
void prefix_sum(std::span<const double> in, double start, std::span<double> out);

Moments moments(std::span<const double> x);

/// Sum of |a[i] - b[i]|.
double abs_diff_sum(std::span<const double> a, std::span<const double> b);

/// Index of the first element strictly greater than threshold, or x.size().
std::size_t first_above(std::span<const double> x, double threshold);

/// Requires a non-empty span.
MinMax minmax(std::span<const double> x);

namespace scalar {
void affine(std::span<const double> x, double offset, double scale, std::span<double> out);
void exp_trapezoid(std::span<const double> t, std::span<const double> v, double rate,
                   std::span<double> out);
void exp_harmonic_step(std::span<const double> t, std::span<const double> v, double rate,
                       std::span<double> out);
void prefix_sum(std::span<const double> in, double start, std::span<double> out);
Moments moments(std::span<const double> x);
double abs_diff_sum(std::span<const double> a, std::span<const double> b);
std::size_t first_above(std::span<const double> x, double threshold);
MinMax minmax(std::span<const double> x);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define SSMP_HAVE_AVX2_KERNELS 1
namespace avx2 {
void affine(std::span<const double> x, double offset, double scale, std::span<double> out);
void exp_trapezoid(std::span<const double> t, std::span<const double> v, double rate,
                   std::span<double> out);
void exp_harmonic_step(std::span<const double> t, std::span<const double> v, double rate,
                       std::span<double> out);
void prefix_sum(std::span<const double> in, double start, std::span<double> out);
Moments moments(std::span<const double> x);
double abs_diff_sum(std::span<const double> a, std::span<const double> b);
std::size_t first_above(std::span<const double> x, double threshold);
MinMax minmax(std::span<const double> x);
}  // namespace avx2
#else
#define SSMP_HAVE_AVX2_KERNELS 0
#endif

}  // namespace ssmp::simd
