#include "ssmp/stats.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ssmp/simd/kernels.hpp"

namespace ssmp {

namespace {

struct Atom {
  double x;
  double w;
};

std::vector<Atom> sorted_atoms(const EmpiricalDist& d) {
  if (d.dims() != 1) throw std::invalid_argument("expected a 1-d distribution, got " + std::to_string(d.dims()));
  std::vector<Atom> a(d.size());
  const auto& x = d.column(0);
  const auto& w = d.weights();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = {x[i], w[i]};
  std::sort(a.begin(), a.end(), [](const Atom& p, const Atom& q) { return p.x < q.x; });
  return a;
}

std::vector<Atom> sorted_atoms(std::span<const double> x) {
  std::vector<Atom> a(x.size());
  const double w = 1.0 / static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) a[i] = {x[i], w};
  std::sort(a.begin(), a.end(), [](const Atom& p, const Atom& q) { return p.x < q.x; });
  return a;
}

// Walks the merged support; calls f(x_k, x_{k+1}, F_a(x_k), F_b(x_k)) for every distinct x_k.
template <class F>
void merged_walk(const std::vector<Atom>& a, const std::vector<Atom>& b, F&& f) {
  if (a.empty() || b.empty()) throw std::invalid_argument("empty distribution");
  std::size_t i = 0, j = 0;
  double fa = 0.0, fb = 0.0;
  while (i < a.size() || j < b.size()) {
    double x;
    if (j >= b.size() || (i < a.size() && a[i].x <= b[j].x))
      x = a[i].x;
    else
      x = b[j].x;
    while (i < a.size() && a[i].x == x) fa += a[i++].w;
    while (j < b.size() && b[j].x == x) fb += b[j++].w;
    double next = x;
    if (i < a.size()) next = a[i].x;
    if (j < b.size()) next = (i < a.size()) ? std::min(next, b[j].x) : b[j].x;
    f(x, next, fa, fb);
  }
}

double ks_atoms(const std::vector<Atom>& a, const std::vector<Atom>& b) {
  double d = 0.0;
  merged_walk(a, b, [&](double, double, double fa, double fb) { d = std::max(d, std::fabs(fa - fb)); });
  return std::min(d, 1.0);
}

double w1_atoms(const std::vector<Atom>& a, const std::vector<Atom>& b) {
  double s = 0.0;
  merged_walk(a, b, [&](double x, double next, double fa, double fb) { s += std::fabs(fa - fb) * (next - x); });
  return s;
}

}  // namespace

EmpiricalDist::EmpiricalDist(std::vector<double> values, std::string name)
    : EmpiricalDist(std::vector<std::vector<double>>{std::move(values)}, {std::move(name)}) {}

EmpiricalDist::EmpiricalDist(std::vector<std::vector<double>> columns, std::vector<std::string> names,
                             std::vector<double> weights)
    : columns_(std::move(columns)), names_(std::move(names)), weights_(std::move(weights)) {
  if (names_.size() != columns_.size()) throw std::invalid_argument("one name per column required");
  const std::size_t n = columns_.empty() ? 0 : columns_[0].size();
  for (const auto& c : columns_)
    if (c.size() != n) throw std::invalid_argument("columns must have equal length");
  if (weights_.empty()) {
    weights_.assign(n, n ? 1.0 / static_cast<double>(n) : 0.0);
  } else {
    if (weights_.size() != n) throw std::invalid_argument("one weight per sample required");
    double total = 0.0;
    for (double w : weights_) {
      if (!(w >= 0.0)) throw std::invalid_argument("weights must be nonnegative");
      total += w;
    }
    if (!(total > 0.0)) throw std::invalid_argument("weights must have positive total");
    for (double& w : weights_) w /= total;
  }
}

std::size_t EmpiricalDist::index_of(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw std::invalid_argument("no column named '" + name + "'");
  return static_cast<std::size_t>(it - names_.begin());
}

EmpiricalDist EmpiricalDist::marginal(std::size_t i) const {
  if (i >= dims()) throw std::invalid_argument("marginal index out of range");
  EmpiricalDist m;
  m.columns_ = {columns_[i]};
  m.names_ = {names_[i]};
  m.weights_ = weights_;
  return m;
}

double EmpiricalDist::mean(std::size_t i) const {
  const auto& c = columns_.at(i);
  double s = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) s += weights_[k] * c[k];
  return s;
}

double EmpiricalDist::total_mass() const { return std::accumulate(weights_.begin(), weights_.end(), 0.0); }

std::vector<double> EmpiricalDist::histogram(std::size_t i, std::size_t n_labels) const {
  std::vector<double> h(n_labels, 0.0);
  const auto& c = columns_.at(i);
  for (std::size_t k = 0; k < c.size(); ++k) {
    const auto label = static_cast<std::size_t>(std::llround(c[k]));
    if (label < n_labels) h[label] += weights_[k];
  }
  return h;
}

std::string EmpiricalDist::to_csv() const {
  std::string out;
  for (const auto& n : names_) out += n + ",";
  out += "weight\n";
  for (std::size_t k = 0; k < size(); ++k) {
    for (const auto& c : columns_) out += format_double(c[k]) + ",";
    out += format_double(weights_[k]) + "\n";
  }
  return out;
}

double ks_distance(const EmpiricalDist& a, const EmpiricalDist& b) {
  return ks_atoms(sorted_atoms(a), sorted_atoms(b));
}

double ks_distance(std::span<const double> a, std::span<const double> b) {
  return ks_atoms(sorted_atoms(a), sorted_atoms(b));
}

double ks_distance_to(std::span<const double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw std::invalid_argument("empty sample");
  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double wasserstein1(const EmpiricalDist& a, const EmpiricalDist& b) {
  return w1_atoms(sorted_atoms(a), sorted_atoms(b));
}

double wasserstein1(std::span<const double> a, std::span<const double> b) {
  return w1_atoms(sorted_atoms(a), sorted_atoms(b));
}

double kolmogorov_survival(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 0.2) return 1.0;
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

double ks_pvalue(double d, std::size_t n, std::size_t m) {
  const double ne = static_cast<double>(n) * static_cast<double>(m) / static_cast<double>(n + m);
  const double sq = std::sqrt(ne);
  return kolmogorov_survival((sq + 0.12 + 0.11 / sq) * d);
}

double ks_pvalue_one_sample(double d, std::size_t n) {
  const double sq = std::sqrt(static_cast<double>(n));
  return kolmogorov_survival((sq + 0.12 + 0.11 / sq) * d);
}

double ks_critical_99(std::size_t n, std::size_t m) {
  const double nd = static_cast<double>(n), md = static_cast<double>(m);
  return 1.62762 * std::sqrt((nd + md) / (nd * md));
}

MeanSe mean_se(std::span<const double> x) {
  MeanSe r;
  r.n = x.size();
  if (x.empty()) return r;
  const simd::Moments m = simd::moments(x);
  const double n = static_cast<double>(x.size());
  r.mean = m.sum / n;
  if (x.size() > 1) {
    const double var = std::max(0.0, (m.sum_sq - n * r.mean * r.mean) / (n - 1.0));
    r.se = std::sqrt(var / n);
  }
  return r;
}

MeanSe correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3) throw std::invalid_argument("correlation needs paired samples, n >= 3");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  MeanSe r;
  r.n = x.size();
  r.mean = (sxx > 0.0 && syy > 0.0) ? sxy / std::sqrt(sxx * syy) : 0.0;
  r.se = 1.0 / std::sqrt(n);
  return r;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("line fit needs two or more points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  return f;
}

TestReport TestReport::make(std::string name, std::string statistic, double value, std::string relation,
                            double threshold, std::vector<std::size_t> sizes, std::uint64_t seed,
                            std::string note) {
  TestReport r;
  r.name = std::move(name);
  r.statistic = std::move(statistic);
  r.value = value;
  r.relation = std::move(relation);
  r.threshold = threshold;
  if (r.relation == "<")
    r.pass = value < threshold;
  else if (r.relation == ">")
    r.pass = value > threshold;
  else
    throw std::invalid_argument("relation must be '<' or '>'");
  r.sample_sizes = std::move(sizes);
  r.seed = seed;
  r.note = std::move(note);
  return r;
}

nlohmann::json to_json(const TestReport& r) {
  nlohmann::json j;
  j["name"] = r.name;
  j["statistic"] = r.statistic;
  j["value"] = std::isfinite(r.value) ? nlohmann::json(r.value) : nlohmann::json(format_double(r.value));
  j["relation"] = r.relation;
  j["threshold"] = r.threshold;
  j["pass"] = r.pass;
  j["sample_sizes"] = r.sample_sizes;
  j["seed"] = r.seed;
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace ssmp
