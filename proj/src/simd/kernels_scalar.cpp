#include <cmath>

#include "ssmp/simd/kernels.hpp"

namespace ssmp::simd::scalar {

void affine(std::span<const double> x, double offset, double scale, std::span<double> out) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double prod = scale * x[i];
    out[i] = offset + prod;
  }
}

void exp_trapezoid(std::span<const double> t, std::span<const double> v, double rate,
                   std::span<double> out) {
  if (t.size() < 2) return;
  double left = std::exp(rate * v[0]);
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    const double right = std::exp(rate * v[i + 1]);
    out[i] = (t[i + 1] - t[i]) * (0.5 * (left + right));
    left = right;
  }
}

void exp_harmonic_step(std::span<const double> t, std::span<const double> v, double rate,
                       std::span<double> out) {
  if (t.size() < 2) return;
  double left = std::exp(rate * v[0]);
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    const double right = std::exp(rate * v[i + 1]);
    out[i] = (t[i + 1] - t[i]) * (2.0 / (left + right));
    left = right;
  }
}

void prefix_sum(std::span<const double> in, double start, std::span<double> out) {
  double acc = start;
  for (std::size_t i = 0; i < in.size(); ++i) {
    acc += in[i];
    out[i] = acc;
  }
}

Moments moments(std::span<const double> x) {
  Moments m;
  for (const double v : x) {
    m.sum += v;
    m.sum_sq += v * v;
  }
  return m;
}

double abs_diff_sum(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
  return s;
}

std::size_t first_above(std::span<const double> x, double threshold) {
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] > threshold) return i;
  return x.size();
}

MinMax minmax(std::span<const double> x) {
  MinMax r{x[0], x[0]};
  for (const double v : x) {
    if (v < r.min) r.min = v;
    if (v > r.max) r.max = v;
  }
  return r;
}

}  // namespace ssmp::simd::scalar
