#include "doctest.h"

#include <cmath>
#include <vector>

#include "ssmp/rng.hpp"
#include "ssmp/simd/kernels.hpp"

using namespace ssmp;

namespace {

std::vector<double> random_vec(std::size_t n, RngStream& r, double scale) {
  std::vector<double> v(n);
  for (auto& x : v) x = scale * r.normal();
  return v;
}

bool close(double a, double b, double rel) { return std::fabs(a - b) <= rel * std::max(1.0, std::fabs(b)); }

}  // namespace

TEST_CASE("dispatch honours requests") {
  const auto before = simd::active_isa();
  simd::set_isa(simd::Isa::scalar);
  CHECK(simd::active_isa() == simd::Isa::scalar);
  simd::set_isa(simd::detected_isa());
  CHECK(simd::active_isa() == simd::detected_isa());
  simd::set_isa(before);
  CHECK(!simd::isa_name(simd::Isa::avx2).empty());
}

#if SSMP_HAVE_AVX2_KERNELS
TEST_CASE("avx2 kernels match the scalar reference") {
  if (simd::detected_isa() != simd::Isa::avx2) return;
  RngStream r(3, 3);
  for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 63u, 1000u, 1003u}) {
    CAPTURE(n);
    const auto x = random_vec(n, r, 3.0);
    std::vector<double> a(n), b(n);

    simd::scalar::affine(x, 0.25, -1.5, a);
    simd::avx2::affine(x, 0.25, -1.5, b);
    CHECK(a == b);

    simd::scalar::prefix_sum(x, 2.0, a);
    simd::avx2::prefix_sum(x, 2.0, b);
    for (std::size_t i = 0; i < n; ++i) REQUIRE(close(a[i], b[i], 1e-12 * static_cast<double>(n + 1)));

    const auto ms = simd::scalar::moments(x), mv = simd::avx2::moments(x);
    CHECK(close(ms.sum, mv.sum, 1e-12));
    CHECK(close(ms.sum_sq, mv.sum_sq, 1e-12));

    const auto y = random_vec(n, r, 1.0);
    CHECK(close(simd::scalar::abs_diff_sum(x, y), simd::avx2::abs_diff_sum(x, y), 1e-12));

    for (double thr : {-1.0, 0.5, 2.0, 100.0}) CHECK(simd::scalar::first_above(x, thr) == simd::avx2::first_above(x, thr));

    if (n > 0) {
      const auto s1 = simd::scalar::minmax(x), s2 = simd::avx2::minmax(x);
      CHECK(s1.min == s2.min);
      CHECK(s1.max == s2.max);
    }
    if (n > 1) {
      std::vector<double> t(n);
      for (std::size_t i = 0; i < n; ++i) t[i] = 0.001 * static_cast<double>(i) + (i % 3 ? 0.0 : 1e-4);
      std::vector<double> ea(n - 1), eb(n - 1);
      for (double rate : {0.5, 1.0, 2.0, -3.0}) {
        simd::scalar::exp_trapezoid(t, x, rate, ea);
        simd::avx2::exp_trapezoid(t, x, rate, eb);
        for (std::size_t i = 0; i + 1 < n; ++i) REQUIRE(std::fabs(ea[i] - eb[i]) <= 1e-13 * std::fabs(ea[i]));
        simd::scalar::exp_harmonic_step(t, x, rate, ea);
        simd::avx2::exp_harmonic_step(t, x, rate, eb);
        for (std::size_t i = 0; i + 1 < n; ++i) REQUIRE(std::fabs(ea[i] - eb[i]) <= 1e-13 * std::fabs(ea[i]));
      }
    }
  }
}

TEST_CASE("avx2 exp stays accurate at the range ends") {
  if (simd::detected_isa() != simd::Isa::avx2) return;
  const std::vector<double> t{0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0};
  const std::vector<double> v{-700.0, -300.0, -30.0, -1e-9, 0.0, 30.0, 300.0, 700.0};
  std::vector<double> a(7), b(7);
  simd::scalar::exp_trapezoid(t, v, 1.0, a);
  simd::avx2::exp_trapezoid(t, v, 1.0, b);
  for (std::size_t i = 0; i < 7; ++i) CHECK(std::fabs(a[i] - b[i]) <= 1e-13 * std::fabs(a[i]));
}
#endif

TEST_CASE("scalar reference values") {
  const std::vector<double> x{1.0, 2.0, 3.0};
  std::vector<double> out(3);
  simd::scalar::prefix_sum(x, 1.0, out);
  CHECK(out == std::vector<double>{2.0, 4.0, 7.0});
  const std::vector<double> t{0.0, 1.0};
  const std::vector<double> v{0.0, 0.0};
  std::vector<double> e(1);
  simd::scalar::exp_trapezoid(t, v, 1.0, e);
  CHECK(e[0] == 1.0);
  const std::vector<double> w{0.0, std::log(3.0)};
  simd::scalar::exp_trapezoid(t, w, 1.0, e);
  CHECK(e[0] == doctest::Approx(2.0));
  simd::scalar::exp_harmonic_step(t, w, 1.0, e);
  CHECK(e[0] == doctest::Approx(0.5));
  CHECK(simd::scalar::first_above(x, 2.5) == 2);
  CHECK(simd::scalar::first_above(x, 5.0) == 3);
}
