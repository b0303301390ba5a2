#include "ssmp/stationary.hpp"

#include <algorithm>
#include <cmath>

#include "ssmp/errors.hpp"
#include "ssmp/map_path.hpp"
#include "ssmp/parallel.hpp"

namespace ssmp {

namespace {

// Calls rise(from, to, state, continuous) each time the running maximum
// increases, until done() or the maximum exceeds `height`. Grid knots only; no
// bridge sampling.
template <class Rise, class Done>
void walk_maxima(const MapSpec& spec, std::uint32_t theta0, double mesh, RngStream rng, double height, Rise&& rise,
                 Done&& done) {
  // Flat (sigma = 0) stretches are taken in unit-time strides instead of grid steps.
  MapWalker walker(spec, 0.0, theta0, mesh, rng, false);
  double top = 0.0;
  std::size_t idle = 0;
  while (walker.alive() && top <= height && !done()) {
    const WalkStep step = walker.advance(walker.time() + 1.0);
    if (step.seg.x1 > top) {
      rise(top, step.seg.x1, step.seg.state, true);
      top = step.seg.x1;
      idle = 0;
    }
    if (step.has_event && step.event.kind != EventKind::kill && step.event.post_xi > top) {
      rise(top, step.event.post_xi, step.event.post_state, false);
      top = step.event.post_xi;
      idle = 0;
    }
    if (++idle > 100'000'000)
      throw SimulationError("running maximum stalled below " + format_double(height) + "; the spec may drift down");
  }
}

template <class Rise>
void walk_maxima(const MapSpec& spec, std::uint32_t theta0, double mesh, RngStream rng, double height, Rise&& rise) {
  walk_maxima(spec, theta0, mesh, rng, height, rise, [] { return false; });
}

// Appends the state once for every multiple of h in (from, to].
void skeleton_points(double from, double to, std::uint32_t state, double h, double burn_in,
                     std::vector<double>& counts) {
  const auto lo = static_cast<std::int64_t>(std::floor(std::max(from, burn_in) / h));
  const auto hi = static_cast<std::int64_t>(std::floor(to / h));
  if (hi > lo) counts[state] += static_cast<double>(hi - lo);
}

double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
  double tv = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) tv += std::fabs(a[i] - b[i]);
  return 0.5 * tv;
}

void normalize(std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  if (s > 0.0)
    for (double& x : v) x /= s;
}

}  // namespace

double marginal_distance(const EmpiricalDist& a, const EmpiricalDist& b) {
  if (a.dims() != b.dims()) throw std::invalid_argument("marginal_distance: dimension mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < a.dims(); ++i) d = std::max(d, ks_distance(a.marginal(i), b.marginal(i)));
  return d;
}

RhoEstimate estimate_rho(const MapSpec& spec, std::uint32_t theta0, const std::vector<double>& levels, std::size_t n,
                         RngStream rng, const PassageOptions& opts) {
  if (levels.empty()) throw SpecError("estimate_rho needs at least one level");
  const auto outcomes = parallel_map<PassageOutcome>(
      n, opts.jobs, [&](std::size_t i) { return first_passages(spec, 0.0, theta0, levels, rng.fork(i), opts); });
  RhoEstimate est;
  est.levels = levels;
  std::vector<std::vector<PassageRecord>> recs(levels.size());
  for (const auto& o : outcomes) {
    if (!o.records.back()) ++est.not_crossed;
    for (std::size_t k = 0; k < levels.size(); ++k)
      if (o.records[k]) recs[k].push_back(*o.records[k]);
  }
  if (static_cast<double>(est.not_crossed) > 0.01 * static_cast<double>(n))
    throw SimulationError(std::to_string(est.not_crossed) + " of " + std::to_string(n) +
                          " replicas did not cross level " + format_double(levels.back()) + " within t_max = " +
                          format_double(opts.t_max) + "; the spec may drift down or t_max is too short");
  for (const auto& r : recs) est.per_level.push_back(passage_dist(r));
  for (std::size_t k = 0; k + 1 < levels.size(); ++k)
    est.consecutive_distance.push_back(marginal_distance(est.per_level[k], est.per_level[k + 1]));
  for (std::size_t k = 0; k < levels.size(); ++k)
    est.distance_to_deepest.push_back(marginal_distance(est.per_level[k], est.deepest()));
  return est;
}

double ExpOvershootLaw::density(double z) const { return z < 0.0 ? 0.0 : beta * std::exp(-beta * z); }

double ExpOvershootLaw::cdf(double z) const { return z <= 0.0 ? 0.0 : -std::expm1(-beta * z); }

ExpOvershootLaw rho_ominus_closed_form(double beta) {
  if (!(beta > 0.0)) throw SpecError("beta must be positive");
  return ExpOvershootLaw{beta};
}

EmpiricalDist sample_rho_oplus(const MapSpec& spec, double x_deep, std::size_t n, RngStream rng, std::uint32_t theta0,
                               const PassageOptions& opts) {
  const RhoEstimate est = estimate_rho(spec, theta0, {x_deep}, n, rng, opts);
  const EmpiricalDist& q = est.deepest();
  return EmpiricalDist({q.column(1), q.column(0)}, {"y", "v"});
}

PiPlusEstimate estimate_pi_plus(const MapSpec& spec, double h, std::size_t n, RngStream rng,
                                const PiPlusOptions& opts) {
  if (!(h > 0.0)) throw SpecError("h_ladder must be positive");
  const std::size_t ns = spec.n_states();
  const Eigen::VectorXd pi = stationary_pi(spec.Q);
  struct Counts {
    std::vector<double> full, half;
  };
  const auto per = parallel_map<Counts>(n, opts.jobs, [&](std::size_t i) {
    Counts c{std::vector<double>(ns, 0.0), std::vector<double>(ns, 0.0)};
    RngStream r = rng.fork(i);
    RngStream side = r.fork(2);
    walk_maxima(spec, draw_state(pi, side), opts.mesh, r, opts.height, [&](double a, double b, std::uint32_t s, bool) {
      const double to = std::min(b, opts.height);
      skeleton_points(a, to, s, h, opts.burn_in, c.full);
      skeleton_points(a, to, s, 0.5 * h, opts.burn_in, c.half);
    });
    return c;
  });
  PiPlusEstimate est;
  est.h = h;
  est.probs.assign(ns, 0.0);
  est.se.assign(ns, 0.0);
  est.probs_half.assign(ns, 0.0);
  est.se_half.assign(ns, 0.0);
  std::vector<double> col(n);
  for (int which = 0; which < 2; ++which) {
    auto& probs = which == 0 ? est.probs : est.probs_half;
    auto& se = which == 0 ? est.se : est.se_half;
    for (std::size_t v = 0; v < ns; ++v) {
      for (std::size_t i = 0; i < n; ++i) {
        const auto& c = which == 0 ? per[i].full : per[i].half;
        double tot = 0.0;
        for (double x : c) tot += x;
        col[i] = tot > 0.0 ? c[v] / tot : 0.0;
        if (which == 0 && v == 0) est.points += static_cast<std::size_t>(tot);
      }
      const MeanSe m = mean_se(col);
      probs[v] = m.mean;
      se[v] = m.se;
    }
  }
  est.tv_half = total_variation(est.probs, est.probs_half);
  return est;
}

PiPlusEstimate pi_plus_long_run(const MapSpec& spec, double h, double height, std::size_t batches, RngStream rng,
                                double mesh) {
  if (!(h > 0.0) || batches < 2) throw SpecError("need h > 0 and at least two batches");
  const std::size_t ns = spec.n_states();
  const double burn = 0.1 * height;
  const double block = (height - burn) / static_cast<double>(batches);
  std::vector<std::vector<double>> full(batches, std::vector<double>(ns, 0.0)), half = full;
  walk_maxima(spec, 0, mesh, rng, height, [&](double a, double b, std::uint32_t s, bool) {
    if (b <= burn) return;
    const auto first = static_cast<std::size_t>(std::max(0.0, std::floor((a - burn) / block)));
    const auto last = std::min(batches - 1, static_cast<std::size_t>(std::floor((b - burn) / block)));
    for (std::size_t k = first; k <= last; ++k) {
      const double lo = burn + static_cast<double>(k) * block;
      const double hi = lo + block;
      if (b <= lo || a >= hi) continue;
      // Multiples of h in (max(a, lo), min(b, hi)].
      const double from = std::max(a, lo), to = std::min(b, hi);
      skeleton_points(from, to, s, h, 0.0, full[k]);
      skeleton_points(from, to, s, 0.5 * h, 0.0, half[k]);
    }
  });
  PiPlusEstimate est;
  est.h = h;
  for (int which = 0; which < 2; ++which) {
    auto& blocks = which == 0 ? full : half;
    std::vector<double> probs(ns), se(ns), col(batches);
    for (auto& b : blocks) {
      if (which == 0)
        for (double x : b) est.points += static_cast<std::size_t>(x);
      normalize(b);
    }
    for (std::size_t v = 0; v < ns; ++v) {
      for (std::size_t k = 0; k < batches; ++k) col[k] = blocks[k][v];
      const MeanSe m = mean_se(col);
      probs[v] = m.mean;
      se[v] = m.se;
    }
    (which == 0 ? est.probs : est.probs_half) = probs;
    (which == 0 ? est.se : est.se_half) = se;
  }
  est.tv_half = total_variation(est.probs, est.probs_half);
  return est;
}

RenewalTable renewal_limit_check(const MapSpec& spec, const std::function<double(std::uint32_t, double)>& g,
                                 const std::vector<double>& y_grid, std::size_t n, RngStream rng,
                                 const RenewalOptions& opts) {
  if (y_grid.empty()) throw SpecError("renewal_limit_check needs a y grid");
  const double h = opts.h_ladder;
  if (!(h > 0.0)) throw SpecError("h_ladder must be positive");
  const std::size_t ns = spec.n_states();
  const std::size_t ny = y_grid.size();
  const double y_max = *std::max_element(y_grid.begin(), y_grid.end());
  const double burn = 0.5 * *std::min_element(y_grid.begin(), y_grid.end());
  const Eigen::VectorXd pi = stationary_pi(spec.Q);

  struct Ladder {
    std::vector<double> sums;
    std::vector<double> states;
    double climbed = 0.0;
    double spacings = 0.0;
  };
  const auto per = parallel_map<Ladder>(n, opts.jobs, [&](std::size_t i) {
    Ladder L{std::vector<double>(ny, 0.0), std::vector<double>(ns, 0.0)};
    RngStream r = rng.fork(i);
    RngStream side = r.fork(2);
    double record = 0.0;
    // Spacing statistics use the gap after every point with height in [burn, y_max],
    // so the walk continues until one point lies beyond y_max.
    const auto point = [&](double H, std::uint32_t v) {
      for (std::size_t j = 0; j < ny; ++j) L.sums[j] += h * g(v, y_grid[j] - H);
      if (H > record && record >= burn && record <= y_max) {
        L.climbed += H - record;
        L.spacings += 1.0;
      }
      if (H >= burn && H <= y_max) L.states[v] += 1.0;
      record = H;
    };
    const std::uint32_t start = draw_state(pi, side);
    point(0.0, start);
    walk_maxima(
        spec, start, opts.mesh, r, std::numeric_limits<double>::infinity(),
        [&](double, double b, std::uint32_t s, bool continuous) {
          if (continuous) {
            while (record + h <= b) point(record + h, s);
          } else if (b >= record + h) {
            point(b, s);
          }
        },
        [&] { return record > y_max; });
    return L;
  });

  RenewalTable table;
  table.pi_plus.assign(ns, 0.0);
  double climbed = 0.0, spacings = 0.0;
  for (const auto& L : per) {
    climbed += L.climbed;
    spacings += L.spacings;
    for (std::size_t v = 0; v < ns; ++v) table.pi_plus[v] += L.states[v];
  }
  for (double x : table.pi_plus) table.ladder_points += static_cast<std::size_t>(x);
  normalize(table.pi_plus);
  table.mu_plus = spacings > 0.0 ? climbed / spacings : 0.0;

  // Midpoint rule for int_0^support g(v, z) dz.
  double weighted = 0.0;
  const double dz = opts.support / static_cast<double>(opts.quadrature_points);
  for (std::size_t v = 0; v < ns; ++v) {
    double integral = 0.0;
    for (std::size_t k = 0; k < opts.quadrature_points; ++k)
      integral += g(static_cast<std::uint32_t>(v), (static_cast<double>(k) + 0.5) * dz) * dz;
    weighted += table.pi_plus[v] * integral;
  }
  const double rhs = table.mu_plus > 0.0 ? h / table.mu_plus * weighted : 0.0;

  std::vector<double> col(n);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < n; ++i) col[i] = per[i].sums[j];
    const MeanSe m = mean_se(col);
    table.rows.push_back(RenewalRow{y_grid[j], m.mean, m.se, rhs});
  }
  return table;
}

}  // namespace ssmp
