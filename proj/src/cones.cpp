#include "ssmp/cones.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ssmp/errors.hpp"
#include "ssmp/parallel.hpp"

namespace ssmp {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_pole(std::complex<double> z) {
  return z.real() <= 0.5 && std::fabs(z.imag()) < 1e-300 && std::fabs(z.real() - std::round(z.real())) < 1e-14;
}

// Distance from (r, phi) to the two edge rays.
double edge_distance(double r, double phi, double theta0) {
  const double near = std::min(phi, theta0 - phi);
  return near < kPi / 2 ? r * std::sin(near) : r;
}

}  // namespace

double ConeModel::m1(double phi) const {
  if (!(phi > 0.0 && phi < theta0)) return 0.0;
  return std::sin(kPi * phi / theta0);
}

double ConeModel::m1_prime(double phi) const { return kPi / theta0 * std::cos(kPi * phi / theta0); }

double eigen_first(double theta0) { return (kPi / theta0) * (kPi / theta0); }

double eigen_first_shooting(double theta0, std::size_t steps) {
  const auto end_value = [&](double lambda) {
    const double h = theta0 / static_cast<double>(steps);
    double m = 0.0, v = 1.0;
    for (std::size_t k = 0; k < steps; ++k) {
      const double k1m = v, k1v = -lambda * m;
      const double k2m = v + 0.5 * h * k1v, k2v = -lambda * (m + 0.5 * h * k1m);
      const double k3m = v + 0.5 * h * k2v, k3v = -lambda * (m + 0.5 * h * k2m);
      const double k4m = v + h * k3v, k4v = -lambda * (m + h * k3m);
      m += h / 6.0 * (k1m + 2 * k2m + 2 * k3m + k4m);
      v += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
    }
    return m;
  };
  // m(theta0) > 0 below the first eigenvalue.
  double lo = 1e-8, hi = lo;
  while (end_value(hi) > 0.0) {
    lo = hi;
    hi *= 1.25;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (end_value(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double cone_exponent(double lambda1, double d) {
  const double a = d / 2.0 - 1.0;
  return std::sqrt(lambda1 + a * a) - a;
}

ConeModel make_cone(double theta0, int d) {
  if (!(theta0 > 0.0 && theta0 < 2.0 * kPi)) throw SpecError("wedge angle must lie in (0, 2 pi)");
  if (d != 2) throw SpecError("cone simulation supports d = 2 only, got d = " + std::to_string(d));
  ConeModel m;
  m.theta0 = theta0;
  m.d = d;
  m.lambda1 = eigen_first(theta0);
  m.p = cone_exponent(m.lambda1, d);
  return m;
}

double polar_angle(double x, double y) {
  const double a = std::atan2(y, x);
  return a < 0.0 ? a + 2.0 * kPi : a;
}

HarmonicValue harmonic_M(const ConeModel& model, double x, double y) {
  const double phi = polar_angle(x, y);
  const double r = std::hypot(x, y);
  if (!(r > 0.0) || !(phi > 0.0 && phi < model.theta0)) return {};
  return {std::pow(r, model.p) * model.m1(phi), true};
}

double harmonicity_residual(const ConeModel& model, double x, double y, double h) {
  const double c = harmonic_M(model, x, y).value;
  if (!(c > 0.0)) throw SpecError("harmonicity check needs an interior point");
  const double lap = harmonic_M(model, x + h, y).value + harmonic_M(model, x - h, y).value +
                     harmonic_M(model, x, y + h).value + harmonic_M(model, x, y - h).value - 4.0 * c;
  return std::fabs(lap / (h * h)) / c;
}

ConeWalk simulate_conditioned_bm(const ConeModel& model, double x0, double y0, RngStream rng,
                                 const ConeWalkOptions& opts) {
  if (!harmonic_M(model, x0, y0).inside) throw SpecError("start point is not inside the wedge");
  ConeWalk w;
  double x = x0, y = y0, t = 0.0;
  if (opts.record) {
    w.t.push_back(t);
    w.x.push_back(x);
    w.y.push_back(y);
  }
  const double stop = opts.stop_radius;
  while (t < opts.t_max) {
    const double r2 = x * x + y * y;
    const double r = std::sqrt(r2);
    const double phi = polar_angle(x, y);
    const double dist = edge_distance(r, phi, model.theta0);
    const double dt = std::min({opts.dt, dist * dist / 24.0, opts.t_max - t});
    if (!(dt > opts.min_dt_rel * r2))
      throw SimulationError("cone walk step underflow: dt = " + format_double(dt) + " at r = " + format_double(r) +
                            ", phi = " + format_double(phi));
    // grad log M in Cartesian coordinates.
    const double tang = model.m1_prime(phi) / model.m1(phi) / r;
    const double bx = model.p * x / r2 - tang * std::sin(phi);
    const double by = model.p * y / r2 + tang * std::cos(phi);
    const double sd = std::sqrt(dt);
    double nx = 0.0, ny = 0.0;
    for (std::size_t tries = 0;; ++tries) {
      if (tries > opts.max_resample)
        throw SimulationError("cone walk: every proposal left the wedge at r = " + format_double(r));
      nx = x + bx * dt + sd * rng.normal();
      ny = y + by * dt + sd * rng.normal();
      const double a = polar_angle(nx, ny);
      if (a > 0.0 && a < model.theta0) break;
      ++w.resamples;
    }
    w.map_time += dt / r2;
    t += dt;
    ++w.steps;
    const double nr = std::hypot(nx, ny);
    bool out = nr >= stop;
    if (!out) {
      const double e = 2.0 * (stop - r) * (stop - nr) / dt;
      out = e < 745.0 && rng.uniform() < std::exp(-e);
    }
    x = nx;
    y = ny;
    if (opts.record) {
      w.t.push_back(t);
      w.x.push_back(x);
      w.y.push_back(y);
    }
    if (out) {
      w.exited = true;
      w.exit_angle = polar_angle(x, y);
      w.exit_radius = nr;
      break;
    }
  }
  w.time = t;
  return w;
}

MartingaleCheck martingale_check(const ConeModel& model, double x0, double y0, double t, std::size_t n,
                                 RngStream rng, unsigned jobs) {
  const bool quadrant = std::fabs(model.theta0 - kPi / 2) < 1e-12;
  const bool half = std::fabs(model.theta0 - kPi) < 1e-12;
  if (!quadrant && !half) throw SpecError("exact martingale check needs the quadrant or the half-plane");
  const HarmonicValue m0 = harmonic_M(model, x0, y0);
  if (!m0.inside) throw SpecError("start point is not inside the wedge");
  const double sd = std::sqrt(t);
  // Coordinate killed at 0 over [0, t]: endpoint, or 0 once killed.
  const auto killed_coordinate = [&](double z0, RngStream& r) {
    const double z1 = z0 + sd * r.normal();
    const double u = r.uniform();
    return z1 > 0.0 && u > std::exp(-2.0 * z0 * z1 / t) ? z1 : 0.0;
  };
  const auto vals = parallel_map<double>(n, jobs, [&](std::size_t i) {
    RngStream r = rng.fork(i);
    const double y1 = killed_coordinate(y0, r);
    if (half) return y1;
    const double x1 = killed_coordinate(x0, r);
    return 2.0 * x1 * y1;
  });
  const MeanSe ms = mean_se(vals);
  return {ms.mean, ms.se, m0.value};
}

MapDrift map_time_drift(const ConeModel& model, double r0, std::size_t n, RngStream rng, const ConeWalkOptions& opts,
                        unsigned jobs) {
  const double phi = model.theta0 / 2;
  struct Inc {
    double dlog, ds;
  };
  const auto incs = parallel_map<Inc>(n, jobs, [&](std::size_t i) {
    const ConeWalk w = simulate_conditioned_bm(model, r0 * std::cos(phi), r0 * std::sin(phi), rng.fork(i), opts);
    if (!w.exited) throw SimulationError("cone walk did not reach the stop radius");
    return Inc{std::log(w.exit_radius / r0), w.map_time};
  });
  // Ratio estimator with delta-method error.
  std::vector<double> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = incs[i].dlog;
    b[i] = incs[i].ds;
  }
  const MeanSe ma = mean_se(a), mb = mean_se(b);
  MapDrift out;
  out.slope = ma.mean / mb.mean;
  std::vector<double> resid(n);
  for (std::size_t i = 0; i < n; ++i) resid[i] = a[i] - out.slope * b[i];
  out.se = mean_se(resid).se / mb.mean;
  out.predicted = 2.0 * model.p + (model.d - 2.0);
  return out;
}

ApexExitLaw apex_exit_law(const ConeModel& model, const std::vector<double>& radii, std::size_t n, RngStream rng,
                          const ConeWalkOptions& opts, std::size_t bootstrap, unsigned jobs) {
  if (radii.size() < 2) throw SpecError("apex exit law needs at least two radii");
  for (std::size_t k = 0; k + 1 < radii.size(); ++k)
    if (!(radii[k + 1] < radii[k])) throw SpecError("apex exit radii must decrease");
  if (!(radii.front() < opts.stop_radius)) throw SpecError("start radii must be inside the stop disc");
  const double phi = model.theta0 / 2;
  ApexExitLaw out;
  out.radii = radii;
  out.bootstrap = bootstrap;
  std::vector<std::vector<double>> samples;
  for (std::size_t k = 0; k < radii.size(); ++k) {
    const RngStream base = rng.fork(k);
    auto ang = parallel_map<double>(n, jobs, [&](std::size_t i) {
      const ConeWalk w =
          simulate_conditioned_bm(model, radii[k] * std::cos(phi), radii[k] * std::sin(phi), base.fork(i), opts);
      if (!w.exited) throw SimulationError("cone walk did not reach the stop radius");
      return w.exit_angle;
    });
    out.angles.emplace_back(ang, "angle");
    samples.push_back(std::move(ang));
  }
  const std::size_t last = radii.size() - 1;
  for (std::size_t k = 0; k < radii.size(); ++k) out.ks_to_smallest.push_back(ks_distance(samples[k], samples[last]));

  RngStream boot = rng.fork(radii.size());
  std::size_t hits = 0;
  std::vector<std::vector<double>> rs(radii.size(), std::vector<double>(n));
  for (std::size_t b = 0; b < bootstrap; ++b) {
    for (std::size_t k = 0; k < radii.size(); ++k)
      for (std::size_t i = 0; i < n; ++i) rs[k][i] = samples[k][boot.below(n)];
    bool dec = true;
    double prev = ks_distance(rs[0], rs[last]);
    for (std::size_t k = 1; k < last && dec; ++k) {
      const double cur = ks_distance(rs[k], rs[last]);
      dec = cur < prev;
      prev = cur;
    }
    if (dec) ++hits;
  }
  out.confidence = bootstrap ? static_cast<double>(hits) / static_cast<double>(bootstrap) : 0.0;
  return out;
}

std::complex<double> log_gamma(std::complex<double> z) {
  static constexpr double g = 7.0;
  static constexpr double c[9] = {0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
                                  771.32342877765313,      -176.61502916214059,   12.507343278686905,
                                  -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};
  if (z.real() < 0.5) return std::log(kPi) - std::log(std::sin(kPi * z)) - log_gamma(1.0 - z);
  z -= 1.0;
  std::complex<double> a = c[0];
  for (int k = 1; k < 9; ++k) a += c[k] / (z + static_cast<double>(k));
  const std::complex<double> t = z + g + 0.5;
  return 0.5 * std::log(2.0 * kPi) + (z + 0.5) * std::log(t) - t + std::log(a);
}

std::complex<double> rgamma(std::complex<double> z) {
  if (is_pole(z)) return 0.0;
  return std::exp(-log_gamma(z));
}

std::complex<double> StableExponents::kappa(std::complex<double> lambda) const {
  return std::exp(log_gamma((lambda + alpha) / 2.0)) * rgamma(lambda / 2.0);
}

std::complex<double> StableExponents::kappa_hat(std::complex<double> lambda) const {
  return std::exp(log_gamma((lambda + d) / 2.0)) * rgamma((lambda + d - alpha) / 2.0);
}

std::complex<double> StableExponents::psi(double theta) const {
  const std::complex<double> i(0.0, 1.0);
  const std::complex<double> b = -i * theta / 2.0, e = (i * theta + d - alpha) / 2.0;
  if (is_pole(b) || is_pole(e)) return 0.0;
  return std::exp(log_gamma((-i * theta + alpha) / 2.0) - log_gamma(b) + log_gamma((i * theta + d) / 2.0) -
                  log_gamma(e));
}

double StableExponents::factorization_residual(double theta) const {
  const std::complex<double> i(0.0, 1.0);
  return std::abs(psi(theta) - kappa(-i * theta) * kappa_hat(i * theta));
}

StableExponents stable_exponents(double alpha, double d) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw SpecError("stable index must lie in (0, 2)");
  if (!(d >= 2.0)) throw SpecError("dimension must be at least 2");
  return {alpha, d};
}

}  // namespace ssmp
