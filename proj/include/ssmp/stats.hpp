#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace ssmp {

/**
 * Weighted sample cloud over R^k. State indices are stored as doubles in their
 * own columns. Weights are kept normalized to total mass 1.
 */
class EmpiricalDist {
 public:
  EmpiricalDist() = default;
  /// One-dimensional cloud with equal weights.
  explicit EmpiricalDist(std::vector<double> values, std::string name = "x");
  /// k columns of equal length; empty weights mean equal weights.
  EmpiricalDist(std::vector<std::vector<double>> columns, std::vector<std::string> names,
                std::vector<double> weights = {});

  std::size_t dims() const noexcept { return columns_.size(); }
  std::size_t size() const noexcept { return weights_.size(); }
  bool empty() const noexcept { return weights_.empty(); }

  const std::vector<double>& column(std::size_t i) const { return columns_.at(i); }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const std::vector<std::string>& names() const noexcept { return names_; }
  std::size_t index_of(const std::string& name) const;

  EmpiricalDist marginal(std::size_t i) const;
  EmpiricalDist marginal(const std::string& name) const { return marginal(index_of(name)); }

  double mean(std::size_t i = 0) const;
  double total_mass() const;

  /// Histogram over integer labels 0..n_labels-1 of column i.
  std::vector<double> histogram(std::size_t i, std::size_t n_labels) const;

  /// CSV with one column per coordinate plus a trailing weight column.
  std::string to_csv() const;

 private:
  std::vector<std::vector<double>> columns_;
  std::vector<std::string> names_;
  std::vector<double> weights_;
};

/// Weighted two-sample Kolmogorov-Smirnov statistic of 1-d clouds.
double ks_distance(const EmpiricalDist& a, const EmpiricalDist& b);
double ks_distance(std::span<const double> a, std::span<const double> b);

/// One-sample statistic against a continuous CDF.
double ks_distance_to(std::span<const double> sample, const std::function<double(double)>& cdf);

/// Earth mover's distance between 1-d clouds (integral of |F_a - F_b|).
double wasserstein1(const EmpiricalDist& a, const EmpiricalDist& b);
double wasserstein1(std::span<const double> a, std::span<const double> b);

/// Survival function of the Kolmogorov distribution, P(K > x).
double kolmogorov_survival(double x);

/// Asymptotic p-value of a two-sample statistic with Stephens' small-sample correction.
double ks_pvalue(double d, std::size_t n, std::size_t m);

/// Asymptotic p-value of a one-sample statistic.
double ks_pvalue_one_sample(double d, std::size_t n);

/// Asymptotic 99% critical value 1.6276 * sqrt((n + m) / (n m)).
double ks_critical_99(std::size_t n, std::size_t m);

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

MeanSe mean_se(std::span<const double> x);

/// Pearson correlation of paired samples and its standard error under independence (1/sqrt(n)).
MeanSe correlation(std::span<const double> x, std::span<const double> y);

/// Least-squares slope and intercept.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

/**
 * One pass/fail statistic. `relation` is "<" or ">", and pass holds exactly when
 * `value relation threshold`.
 */
struct TestReport {
  std::string name;
  std::string statistic;
  double value = 0.0;
  double threshold = 0.0;
  std::string relation = "<";
  bool pass = false;
  std::vector<std::size_t> sample_sizes;
  std::uint64_t seed = 0;
  std::string note;

  static TestReport make(std::string name, std::string statistic, double value, std::string relation,
                         double threshold, std::vector<std::size_t> sizes, std::uint64_t seed,
                         std::string note = {});
};

nlohmann::json to_json(const TestReport& r);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

}  // namespace ssmp
