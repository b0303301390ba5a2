// Compiled with -mavx2 -mfma; only reached after the dispatcher has checked CPUID.

#include <immintrin.h>

#include <bit>
#include <cmath>
#include <cstdint>

#include "ssmp/simd/kernels.hpp"

namespace ssmp::simd::avx2 {

namespace {

// exp(x) for |x| <= 708: x = n ln2 + r with |r| <= ln2/2, exp(r) by a
// degree-12 Taylor polynomial (truncation < 2e-16 relative), 2^n by exponent
// bit assembly.
inline __m256d exp_pd(__m256d x) {
  const __m256d hi = _mm256_set1_pd(708.0);
  const __m256d lo = _mm256_set1_pd(-708.0);
  x = _mm256_min_pd(_mm256_max_pd(x, lo), hi);

  const __m256d log2e = _mm256_set1_pd(1.4426950408889634);
  const __m256d ln2_hi = _mm256_set1_pd(6.93147180369123816490e-01);
  const __m256d ln2_lo = _mm256_set1_pd(1.90821492927058770002e-10);
  const __m256d magic = _mm256_set1_pd(0x1.8p52);

  const __m256d shifted = _mm256_fmadd_pd(x, log2e, magic);
  const __m256d n = _mm256_sub_pd(shifted, magic);
  __m256d r = _mm256_fnmadd_pd(n, ln2_hi, x);
  r = _mm256_fnmadd_pd(n, ln2_lo, r);

  constexpr double c[] = {1.0 / 479001600.0, 1.0 / 39916800.0, 1.0 / 3628800.0,
                          1.0 / 362880.0,    1.0 / 40320.0,    1.0 / 5040.0,
                          1.0 / 720.0,       1.0 / 120.0,      1.0 / 24.0,
                          1.0 / 6.0,         0.5,              1.0,
                          1.0};
  __m256d p = _mm256_set1_pd(c[0]);
  for (int k = 1; k < 13; ++k) p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(c[k]));

  const __m256i bits = _mm256_slli_epi64(
      _mm256_add_epi64(_mm256_castpd_si256(shifted), _mm256_set1_epi64x(1023)), 52);
  return _mm256_mul_pd(p, _mm256_castsi256_pd(bits));
}

inline double hsum(__m256d v) {
  const __m128d low = _mm256_castpd256_pd128(v);
  const __m128d high = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(low, high);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

void affine(std::span<const double> x, double offset, double scale, std::span<double> out) {
  const std::size_t n = x.size();
  const __m256d a = _mm256_set1_pd(offset);
  const __m256d b = _mm256_set1_pd(scale);
  std::size_t i = 0;
  // mul then add (no FMA) so the result matches the scalar reference bit for bit.
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out.data() + i, _mm256_add_pd(a, _mm256_mul_pd(b, _mm256_loadu_pd(x.data() + i))));
  for (; i < n; ++i) {
    const double prod = scale * x[i];
    out[i] = offset + prod;
  }
}

void exp_trapezoid(std::span<const double> t, std::span<const double> v, double rate,
                   std::span<double> out) {
  const std::size_t m = t.size() < 2 ? 0 : t.size() - 1;
  const __m256d k = _mm256_set1_pd(rate);
  const __m256d half = _mm256_set1_pd(0.5);
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    const __m256d e0 = exp_pd(_mm256_mul_pd(k, _mm256_loadu_pd(v.data() + i)));
    const __m256d e1 = exp_pd(_mm256_mul_pd(k, _mm256_loadu_pd(v.data() + i + 1)));
    const __m256d dt = _mm256_sub_pd(_mm256_loadu_pd(t.data() + i + 1), _mm256_loadu_pd(t.data() + i));
    _mm256_storeu_pd(out.data() + i, _mm256_mul_pd(dt, _mm256_mul_pd(half, _mm256_add_pd(e0, e1))));
  }
  for (; i < m; ++i)
    out[i] = (t[i + 1] - t[i]) * (0.5 * (std::exp(rate * v[i]) + std::exp(rate * v[i + 1])));
}

void exp_harmonic_step(std::span<const double> t, std::span<const double> v, double rate,
                       std::span<double> out) {
  const std::size_t m = t.size() < 2 ? 0 : t.size() - 1;
  const __m256d k = _mm256_set1_pd(rate);
  const __m256d two = _mm256_set1_pd(2.0);
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    const __m256d e0 = exp_pd(_mm256_mul_pd(k, _mm256_loadu_pd(v.data() + i)));
    const __m256d e1 = exp_pd(_mm256_mul_pd(k, _mm256_loadu_pd(v.data() + i + 1)));
    const __m256d dt = _mm256_sub_pd(_mm256_loadu_pd(t.data() + i + 1), _mm256_loadu_pd(t.data() + i));
    _mm256_storeu_pd(out.data() + i, _mm256_mul_pd(dt, _mm256_div_pd(two, _mm256_add_pd(e0, e1))));
  }
  for (; i < m; ++i)
    out[i] = (t[i + 1] - t[i]) * (2.0 / (std::exp(rate * v[i]) + std::exp(rate * v[i + 1])));
}

void prefix_sum(std::span<const double> in, double start, std::span<double> out) {
  const std::size_t n = in.size();
  const __m256d zero = _mm256_setzero_pd();
  __m256d carry = _mm256_set1_pd(start);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(in.data() + i);
    // [a b c d] -> [a, a+b, b+c, c+d] -> [a, a+b, a+b+c, a+b+c+d]
    v = _mm256_add_pd(v, _mm256_blend_pd(_mm256_permute4x64_pd(v, 0x90), zero, 0x1));
    v = _mm256_add_pd(v, _mm256_blend_pd(_mm256_permute4x64_pd(v, 0x40), zero, 0x3));
    v = _mm256_add_pd(v, carry);
    _mm256_storeu_pd(out.data() + i, v);
    carry = _mm256_permute4x64_pd(v, 0xFF);
  }
  double acc = _mm256_cvtsd_f64(carry);
  for (; i < n; ++i) {
    acc += in[i];
    out[i] = acc;
  }
}

Moments moments(std::span<const double> x) {
  const std::size_t n = x.size();
  __m256d s = _mm256_setzero_pd();
  __m256d q = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x.data() + i);
    s = _mm256_add_pd(s, v);
    q = _mm256_fmadd_pd(v, v, q);
  }
  Moments m{hsum(s), hsum(q)};
  for (; i < n; ++i) {
    m.sum += x[i];
    m.sum_sq += x[i] * x[i];
  }
  return m;
}

double abs_diff_sum(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d s = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i));
    s = _mm256_add_pd(s, _mm256_andnot_pd(sign, d));
  }
  double total = hsum(s);
  for (; i < n; ++i) total += std::fabs(a[i] - b[i]);
  return total;
}

std::size_t first_above(std::span<const double> x, double threshold) {
  const std::size_t n = x.size();
  const __m256d th = _mm256_set1_pd(threshold);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const int mask = _mm256_movemask_pd(_mm256_cmp_pd(_mm256_loadu_pd(x.data() + i), th, _CMP_GT_OQ));
    if (mask != 0) return i + static_cast<std::size_t>(std::countr_zero(static_cast<unsigned>(mask)));
  }
  for (; i < n; ++i)
    if (x[i] > threshold) return i;
  return n;
}

MinMax minmax(std::span<const double> x) {
  const std::size_t n = x.size();
  MinMax r{x[0], x[0]};
  std::size_t i = 0;
  if (n >= 4) {
    __m256d lo = _mm256_loadu_pd(x.data());
    __m256d hi = lo;
    for (i = 4; i + 4 <= n; i += 4) {
      const __m256d v = _mm256_loadu_pd(x.data() + i);
      lo = _mm256_min_pd(lo, v);
      hi = _mm256_max_pd(hi, v);
    }
    alignas(32) double l[4];
    alignas(32) double h[4];
    _mm256_store_pd(l, lo);
    _mm256_store_pd(h, hi);
    for (int k = 0; k < 4; ++k) {
      if (l[k] < r.min) r.min = l[k];
      if (h[k] > r.max) r.max = h[k];
    }
  }
  for (; i < n; ++i) {
    if (x[i] < r.min) r.min = x[i];
    if (x[i] > r.max) r.max = x[i];
  }
  return r;
}

}  // namespace ssmp::simd::avx2
