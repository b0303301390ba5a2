#include "ssmp/fluctuation.hpp"

#include <algorithm>
#include <cmath>

#include "ssmp/errors.hpp"
#include "ssmp/map_path.hpp"
#include "ssmp/parallel.hpp"

namespace ssmp {

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  return v[mid];
}

}  // namespace

PassageOutcome first_passages(const MapSpec& spec, double x0, std::uint32_t theta0, const std::vector<double>& levels,
                              RngStream rng, const PassageOptions& opts) {
  if (!(opts.t_max > 0.0)) throw SpecError("t_max must be positive");
  if (!std::is_sorted(levels.begin(), levels.end())) throw SpecError("levels must be increasing");
  PassageOutcome out;
  out.records.assign(levels.size(), std::nullopt);
  out.max_seen = x0;

  std::size_t k = 0;
  // Already above: tau = 0.
  for (; k < levels.size() && x0 > levels[k]; ++k) {
    PassageRecord r;
    r.level = levels[k];
    r.overshoot = x0 - levels[k];
    r.state_before = r.state_after = theta0;
    out.records[k] = r;
  }

  MapWalker walker(spec, x0, theta0, opts.mesh, rng, false);
  while (k < levels.size() && walker.alive() && walker.time() < opts.t_max) {
    const WalkStep step = walker.advance(opts.t_max);
    const Segment& s = step.seg;
    double top = std::max(s.x0, s.x1);
    if (opts.bridge && s.sigma > 0.0) top = bridge_max(s, walker.aux().uniform());
    out.max_seen = std::max(out.max_seen, top);

    for (; k < levels.size() && top > levels[k]; ++k) {
      PassageRecord r;
      r.level = levels[k];
      r.crept = true;
      r.state_before = r.state_after = s.state;
      if (s.sigma == 0.0 && s.x1 != s.x0)
        r.time = s.t0 + (levels[k] - s.x0) / (s.x1 - s.x0) * s.length();
      else
        r.time = s.t1;
      out.records[k] = r;
    }
    if (step.has_event) {
      const MapEvent& ev = step.event;
      if (ev.kind == EventKind::kill) {
        out.killed = true;
        break;
      }
      out.max_seen = std::max(out.max_seen, ev.post_xi);
      for (; k < levels.size() && ev.post_xi > levels[k]; ++k) {
        PassageRecord r;
        r.level = levels[k];
        r.time = ev.time;
        r.undershoot = levels[k] - ev.pre_xi;
        r.overshoot = ev.post_xi - levels[k];
        r.state_before = ev.pre_state;
        r.state_after = ev.post_state;
        out.records[k] = r;
      }
    }
  }
  out.time_simulated = walker.time();
  return out;
}

PassageOutcome first_passage(const MapSpec& spec, double x0, std::uint32_t theta0, double level, RngStream rng,
                             const PassageOptions& opts) {
  return first_passages(spec, x0, theta0, {level}, rng, opts);
}

EmpiricalDist passage_dist(const std::vector<PassageRecord>& records) {
  std::vector<std::vector<double>> cols(4);
  for (auto& c : cols) c.reserve(records.size());
  for (const auto& r : records) {
    cols[0].push_back(r.state_before);
    cols[1].push_back(-r.undershoot);
    cols[2].push_back(r.state_after);
    cols[3].push_back(r.overshoot);
  }
  return EmpiricalDist(std::move(cols), {"v", "y", "phi", "z"});
}

OvershootEnsemble overshoot_ensemble(const MapSpec& spec, std::uint32_t theta0, double level, std::size_t n,
                                     RngStream rng, const PassageOptions& opts) {
  const auto outcomes = parallel_map<PassageOutcome>(
      n, opts.jobs, [&](std::size_t i) { return first_passage(spec, 0.0, theta0, level, rng.fork(i), opts); });
  OvershootEnsemble ens;
  ens.records.reserve(n);
  double worst_max = 0.0;
  for (const auto& o : outcomes) {
    if (o.records[0])
      ens.records.push_back(*o.records[0]);
    else {
      ++ens.not_crossed;
      worst_max = std::max(worst_max, o.max_seen);
    }
  }
  if (static_cast<double>(ens.not_crossed) > 0.01 * static_cast<double>(n))
    throw SimulationError(std::to_string(ens.not_crossed) + " of " + std::to_string(n) +
                          " replicas did not cross level " + format_double(level) + " within t_max = " +
                          format_double(opts.t_max) + " (largest partial maximum " + format_double(worst_max) +
                          "); the spec may drift down or t_max is too short");
  ens.dist = passage_dist(ens.records);
  return ens;
}

std::uint32_t draw_state(const Eigen::VectorXd& p, RngStream& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    acc += p(j);
    if (u < acc) return static_cast<std::uint32_t>(j);
  }
  return static_cast<std::uint32_t>(p.size() - 1);
}

std::vector<MaxTriple> wiener_hopf_probe(const MapSpec& spec, double q, std::size_t n, RngStream rng,
                                         const ProbeOptions& opts) {
  if (!(q > 0.0)) throw SpecError("q must be positive");
  const Eigen::VectorXd pi = stationary_pi(spec.Q);
  return parallel_map<MaxTriple>(n, opts.jobs, [&](std::size_t i) {
    RngStream r = rng.fork(i);
    RngStream side = r.fork(2);
    MaxTriple m;
    m.horizon = side.exponential(q);
    m.start_state = opts.start_from_pi ? draw_state(pi, side) : opts.theta0;
    MapWalker walker(spec, 0.0, m.start_state, opts.mesh, r, false);
    m.state_at_max = m.start_state;
    while (walker.alive() && walker.time() < m.horizon) {
      const WalkStep step = walker.advance(m.horizon);
      const Segment& s = step.seg;
      if (opts.bridge && s.sigma > 0.0) {
        const double top = bridge_max(s, walker.aux().uniform());
        if (top > m.max) {
          m.max = top;
          m.argmax = top == s.x1 ? s.t1 : (top == s.x0 ? s.t0 : 0.5 * (s.t0 + s.t1));
          m.state_at_max = s.state;
        }
      } else if (s.x1 >= m.max) {
        m.max = s.x1;
        m.argmax = s.t1;
        m.state_at_max = s.state;
      } else if (s.x0 >= m.max) {
        m.max = s.x0;
        m.argmax = s.t0;
        m.state_at_max = s.state;
      }
      if (step.has_event && step.event.kind != EventKind::kill && step.event.post_xi >= m.max) {
        m.max = step.event.post_xi;
        m.argmax = step.event.time;
        m.state_at_max = step.event.post_state;
      }
    }
    if (!walker.alive()) m.horizon = walker.time();
    m.end_value = walker.xi();
    m.end_state = walker.state();
    m.gap = m.max - m.end_value;
    return m;
  });
}

DriftEstimate drift_rate(const MapSpec& spec, double horizon, std::size_t n, RngStream rng, const DriftOptions& opts) {
  const Eigen::VectorXd pi = stationary_pi(spec.Q);
  const auto N = static_cast<Eigen::Index>(spec.n_states());
  if (N > 1) {
    double slowest = 0.0;
    for (Eigen::Index j = 0; j < N; ++j) slowest = std::max(slowest, -1.0 / spec.Q(j, j));
    if (horizon < 100.0 * slowest)
      throw SpecError("horizon " + format_double(horizon) + " is shorter than 100 mean holding times (" +
                      format_double(100.0 * slowest) + ")");
  }
  struct Run {
    double rate, max_q, max_end, negmin_q, negmin_end;
  };
  const double quarter = 0.25 * horizon;
  const auto runs = parallel_map<Run>(n, opts.jobs, [&](std::size_t i) {
    RngStream r = rng.fork(i);
    RngStream side = r.fork(2);
    MapWalker walker(spec, 0.0, draw_state(pi, side), opts.mesh, r, false);
    double hi = 0.0, lo = 0.0;
    Run run{};
    bool quarter_done = false;
    while (walker.alive() && walker.time() < horizon) {
      const double stop = quarter_done ? horizon : quarter;
      const WalkStep step = walker.advance(stop);
      const Segment& s = step.seg;
      if (s.sigma > 0.0) {
        hi = std::max(hi, bridge_max(s, walker.aux().uniform()));
        lo = std::min(lo, bridge_min(s, walker.aux().uniform()));
      } else {
        hi = std::max({hi, s.x0, s.x1});
        lo = std::min({lo, s.x0, s.x1});
      }
      if (step.has_event && step.event.kind != EventKind::kill) {
        hi = std::max(hi, step.event.post_xi);
        lo = std::min(lo, step.event.post_xi);
      }
      if (!quarter_done && walker.time() >= quarter) {
        run.max_q = hi;
        run.negmin_q = -lo;
        quarter_done = true;
      }
    }
    run.rate = walker.xi() / horizon;
    run.max_end = hi;
    run.negmin_end = -lo;
    return run;
  });

  DriftEstimate est;
  est.horizon = horizon;
  est.n = n;
  est.excursion_level = opts.excursion_level;
  est.analytic = analytic_drift(spec, pi);
  std::vector<double> rate(n), mq(n), me(n), nq(n), ne(n);
  std::size_t both = 0, both_q = 0;
  for (std::size_t i = 0; i < n; ++i) {
    rate[i] = runs[i].rate;
    mq[i] = runs[i].max_q;
    me[i] = runs[i].max_end;
    nq[i] = runs[i].negmin_q;
    ne[i] = runs[i].negmin_end;
    if (me[i] > opts.excursion_level && ne[i] > opts.excursion_level) ++both;
    if (mq[i] > opts.excursion_level && nq[i] > opts.excursion_level) ++both_q;
  }
  const MeanSe ms = mean_se(rate);
  est.mean = ms.mean;
  est.se = ms.se;
  est.lo = ms.mean - opts.z * ms.se;
  est.hi = ms.mean + opts.z * ms.se;
  est.both_exceed = n ? static_cast<double>(both) / static_cast<double>(n) : 0.0;
  est.both_exceed_quarter = n ? static_cast<double>(both_q) / static_cast<double>(n) : 0.0;
  est.median_max_quarter = median(mq);
  est.median_max_end = median(me);
  est.median_negmin_quarter = median(nq);
  est.median_negmin_end = median(ne);
  return est;
}

std::string to_string(Trichotomy t) {
  switch (t) {
    case Trichotomy::drifts_up: return "drifts_up";
    case Trichotomy::oscillates: return "oscillates";
    case Trichotomy::drifts_down: return "drifts_down";
    case Trichotomy::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

Trichotomy classify_trichotomy(const DriftEstimate& est, const TrichotomyOptions& opts) {
  if (est.lo > 0.0) return Trichotomy::drifts_up;
  if (est.hi < 0.0) return Trichotomy::drifts_down;
  if (est.hi - est.lo > opts.max_ci_width) return Trichotomy::inconclusive;
  const bool growing = est.median_max_end > est.median_max_quarter && est.median_negmin_end > est.median_negmin_quarter;
  if (growing && est.both_exceed > est.both_exceed_quarter) return Trichotomy::oscillates;
  return Trichotomy::inconclusive;
}

VigonTable vigon_check(const MapSpec& levy_spec, const std::vector<double>& y_grid, std::size_t n, RngStream rng,
                       const VigonOptions& opts) {
  if (levy_spec.n_states() != 1) throw SpecError("vigon_check needs a one-state spec");
  if (!(opts.h_ladder > 0.0) || !(opts.horizon > 0.0)) throw SpecError("h_ladder and horizon must be positive");
  const OrdinateLaw& law = levy_spec.ordinate[0];
  const auto tail = [&](double y) { return law.jump_rate * law.jump.tail(y); };
  const double h = opts.h_ladder;
  const std::size_t ny = y_grid.size();

  struct PathCounts {
    std::vector<double> lhs;
    std::vector<double> rhs;
  };
  const auto per_path = parallel_map<PathCounts>(n, opts.jobs, [&](std::size_t i) {
    PathCounts pc{std::vector<double>(ny, 0.0), std::vector<double>(ny, 0.0)};
    MapWalker walker(levy_spec, 0.0, 0, opts.horizon, rng.fork(i), false);
    double hi = 0.0, lo = 0.0;
    // Bins [b h, (b+1) h) of -min reached so far; bins skipped by a downward jump stay unvisited.
    std::int64_t deepest_bin = 0;
    std::vector<std::int64_t> visited{0};
    const auto visit_continuous = [&](double new_lo) {
      const auto b = static_cast<std::int64_t>(std::floor(-new_lo / h));
      for (std::int64_t k = deepest_bin + 1; k <= b; ++k) visited.push_back(k);
      deepest_bin = std::max(deepest_bin, b);
    };
    while (walker.alive() && walker.time() < opts.horizon) {
      const WalkStep step = walker.advance(opts.horizon);
      const Segment& s = step.seg;
      const double top = s.sigma > 0.0 ? bridge_max(s, walker.aux().uniform()) : std::max(s.x0, s.x1);
      const double bottom = s.sigma > 0.0 ? bridge_min(s, walker.aux().uniform()) : std::min(s.x0, s.x1);
      hi = std::max(hi, top);
      if (bottom < lo) {
        visit_continuous(bottom);
        lo = bottom;
      }
      if (step.has_event && step.event.kind != EventKind::kill) {
        const double post = step.event.post_xi;
        if (post > hi) {
          const double size = post - hi;
          for (std::size_t j = 0; j < ny; ++j)
            if (size > y_grid[j]) pc.lhs[j] += 1.0;
          hi = post;
        }
        if (post < lo) {
          const auto b = static_cast<std::int64_t>(std::floor(-post / h));
          if (b > deepest_bin) {
            visited.push_back(b);
            deepest_bin = b;
          }
          lo = post;
        }
      }
    }
    for (const std::int64_t b : visited) {
      const double z = (static_cast<double>(b) + 0.5) * h;
      for (std::size_t j = 0; j < ny; ++j) pc.rhs[j] += h * tail(z + y_grid[j]);
    }
    return pc;
  });

  VigonTable table;
  table.n = n;
  table.horizon = opts.horizon;
  table.h_ladder = h;
  std::vector<double> col(n);
  double ratio_sum = 0.0;
  std::size_t ratio_count = 0;
  for (std::size_t j = 0; j < ny; ++j) {
    VigonRow row;
    row.y = y_grid[j];
    for (std::size_t i = 0; i < n; ++i) col[i] = per_path[i].lhs[j];
    const MeanSe l = mean_se(col);
    for (std::size_t i = 0; i < n; ++i) col[i] = per_path[i].rhs[j];
    const MeanSe r = mean_se(col);
    row.lhs = l.mean;
    row.lhs_se = l.se;
    row.rhs = r.mean;
    row.rhs_se = r.se;
    if (r.mean > 0.0 && l.mean > 0.0) {
      row.ratio = l.mean / r.mean;
      row.ratio_se = row.ratio * std::hypot(l.se / l.mean, r.se / r.mean);
      ratio_sum += row.ratio;
      ++ratio_count;
    }
    table.rows.push_back(row);
  }
  if (ratio_count > 0) {
    const double mean_ratio = ratio_sum / static_cast<double>(ratio_count);
    for (const auto& row : table.rows)
      if (row.ratio > 0.0)
        table.max_ratio_deviation = std::max(table.max_ratio_deviation, std::fabs(row.ratio / mean_ratio - 1.0));
  }
  return table;
}

}  // namespace ssmp
