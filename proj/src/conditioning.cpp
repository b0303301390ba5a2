#include "ssmp/conditioning.hpp"

#include <algorithm>
#include <cmath>

#include "ssmp/errors.hpp"
#include "ssmp/fluctuation.hpp"
#include "ssmp/parallel.hpp"
#include "ssmp/stationary.hpp"

namespace ssmp {

namespace {

double negative_drift_or_throw(const MapSpec& dual, const Eigen::VectorXd& pi, const char* what) {
  const double drift = analytic_drift(dual, pi);
  if (!(drift < 0.0))
    throw SpecError(std::string(what) + ": long-run drift of the dual is " + format_double(drift) +
                    ", not negative, so the probability of never going above 0 is identically 0");
  return drift;
}

// Largest value of a segment, bridge-sampled when Gaussian.
double segment_top(const Segment& s, RngStream& aux) {
  return s.sigma > 0.0 ? bridge_max(s, aux.uniform()) : std::max(s.x0, s.x1);
}

// int exp(alpha xi) over a segment: exact when linear, trapezoid otherwise.
double segment_clock(const Segment& s, double alpha) {
  const double h = s.length();
  const double f0 = std::exp(alpha * s.x0), f1 = std::exp(alpha * s.x1);
  if (s.sigma > 0.0 || s.x1 == s.x0) return 0.5 * h * (f0 + f1);
  return h * (f1 - f0) / (alpha * (s.x1 - s.x0));
}

// Clock from the start of a linear segment to the point where it reaches `level`.
double partial_clock(const Segment& s, double alpha, double level) {
  if (s.sigma > 0.0 || s.x1 == s.x0) return segment_clock(s, alpha);
  const double hc = (level - s.x0) / (s.x1 - s.x0) * s.length();
  if (level == s.x0) return 0.0;
  return hc * (std::exp(alpha * level) - std::exp(alpha * s.x0)) / (alpha * (level - s.x0));
}

}  // namespace

double hplus_brownian(double m, double sigma, double y) {
  if (y >= 0.0) return 0.0;
  return -std::expm1(-2.0 * std::fabs(m) * std::fabs(y) / (sigma * sigma));
}

HplusEstimate estimate_Hplus(const MapSpec& dual, const std::vector<double>& y_grid,
                             const std::vector<std::uint32_t>& states, double horizon, std::size_t n, RngStream rng,
                             const HplusOptions& opts) {
  const Eigen::VectorXd pi = stationary_pi(dual.Q);
  const double drift = negative_drift_or_throw(dual, pi, "estimate_Hplus");
  if (horizon < 50.0 / std::fabs(drift))
    throw SpecError("estimate_Hplus: horizon " + format_double(horizon) + " is shorter than 50 / |drift| = " +
                    format_double(50.0 / std::fabs(drift)));
  for (auto s : states)
    if (s >= dual.n_states()) throw SpecError("estimate_Hplus: state " + std::to_string(s) + " out of range");

  HplusEstimate est;
  est.y_grid = y_grid;
  est.states = states;
  est.horizon = horizon;
  est.n = n;
  const double nd = static_cast<double>(n);
  for (std::size_t si = 0; si < states.size(); ++si) {
    struct Maxima {
      double at_T, at_2T;
    };
    const RngStream base = rng.fork(si);
    auto maxima = parallel_map<Maxima>(n, opts.jobs, [&](std::size_t i) {
      MapWalker walker(dual, 0.0, states[si], opts.mesh, base.fork(i), false);
      double top = 0.0;
      Maxima m{0.0, 0.0};
      for (const double stop : {horizon, 2.0 * horizon}) {
        while (walker.alive() && walker.time() < stop) {
          const WalkStep step = walker.advance(stop);
          top = std::max(top, segment_top(step.seg, walker.aux()));
          if (step.has_event && step.event.kind != EventKind::kill) top = std::max(top, step.event.post_xi);
        }
        (stop == horizon ? m.at_T : m.at_2T) = top;
      }
      return m;
    });
    std::vector<double> mT(n), m2T(n);
    for (std::size_t i = 0; i < n; ++i) {
      mT[i] = maxima[i].at_T;
      m2T[i] = maxima[i].at_2T;
    }
    std::sort(mT.begin(), mT.end());
    std::sort(m2T.begin(), m2T.end());
    std::vector<double> vals, ses, vals2;
    for (double y : y_grid) {
      if (y >= 0.0) {
        vals.push_back(0.0);
        ses.push_back(0.0);
        vals2.push_back(0.0);
        continue;
      }
      // Count of maxima <= -y.
      const double p = static_cast<double>(std::upper_bound(mT.begin(), mT.end(), -y) - mT.begin()) / nd;
      const double p2 = static_cast<double>(std::upper_bound(m2T.begin(), m2T.end(), -y) - m2T.begin()) / nd;
      vals.push_back(p);
      ses.push_back(std::sqrt(p * (1.0 - p) / nd));
      vals2.push_back(p2);
      est.max_horizon_bias = std::max(est.max_horizon_bias, p - p2);
    }
    est.values.push_back(std::move(vals));
    est.se.push_back(std::move(ses));
    est.values_2T.push_back(std::move(vals2));
  }
  return est;
}

namespace {

ConditionedPath rejection_sample(const MapSpec& dual, double y0, std::uint32_t theta0, RngStream rng,
                                 const ConditionedOptions& opts) {
  if (!(y0 < 0.0)) throw SpecError("rejection sampling needs y0 < 0, got " + format_double(y0));
  if (dual.kill_rate > 0.0) throw SpecError("conditioning to stay negative is not supported with killing");
  const Eigen::VectorXd pi = stationary_pi(dual.Q);
  const double drift = negative_drift_or_throw(dual, pi, "sample_conditioned_negative");
  double t_check = opts.t_check > 0.0 ? opts.t_check : 50.0 / std::fabs(drift);
  if (std::isfinite(opts.record_horizon)) t_check = std::max(t_check, opts.record_horizon);
  const auto budget = static_cast<std::size_t>(std::ceil(1.0 / opts.min_acceptance));

  for (std::size_t attempt = 0;; ++attempt) {
    if (attempt >= budget)
      throw SimulationError("rejection acceptance rate below " + format_double(opts.min_acceptance) + " (" +
                            std::to_string(attempt) + " failed attempts from y0 = " + format_double(y0) +
                            "); start lower, i.e. from a more negative y0");
    MapWalker walker(dual, y0, theta0, opts.mesh, rng.fork(attempt));
    ConditionedPath out;
    out.attempts = attempt + 1;
    out.path.mesh = opts.mesh;
    out.path.push(0.0, y0, theta0);
    bool recording = true;
    bool ok = true;
    while (walker.alive() && (recording || walker.time() < t_check)) {
      const double stop = recording ? opts.record_horizon : t_check;
      const WalkStep step = walker.advance(stop);
      const Segment& s = step.seg;
      if (s.x1 >= 0.0 || (s.sigma > 0.0 && walker.aux().uniform() < bridge_cross_probability(s, 0.0))) {
        ok = false;
        break;
      }
      if (step.has_event && step.event.post_xi >= 0.0) {
        ok = false;
        break;
      }
      if (recording) {
        out.path.push(s.t1, s.x1, s.state);
        if (step.has_event) {
          out.path.events.push_back(step.event);
          const MapEvent& ev = step.event;
          if (ev.post_xi != ev.pre_xi || ev.post_state != ev.pre_state) out.path.push(ev.time, ev.post_xi, ev.post_state);
        }
        if (walker.time() >= opts.record_horizon || walker.xi() < -opts.k_stop) {
          recording = false;
          walker.set_grid_on_flat(false);
        }
      }
    }
    if (ok) return out;
  }
}

ConditionedPath h_transform_sample(const MapSpec& dual, double y0, std::uint32_t theta0, RngStream rng,
                                   const ConditionedOptions& opts) {
  if (dual.n_states() != 1) throw SpecError("h_transform_levy needs a one-state spec");
  const OrdinateLaw& law = dual.ordinate[0];
  if (!(law.sigma > 0.0) || !(law.drift < 0.0) || law.jump_rate > 0.0 || dual.kill_rate > 0.0)
    throw SpecError("h_transform_levy needs a Brownian ordinate with negative drift, no jumps and no killing");
  if (y0 > 0.0) throw SpecError("h_transform_levy needs y0 <= 0, got " + format_double(y0));
  if (!std::isfinite(opts.record_horizon) && !std::isfinite(opts.k_stop))
    throw SpecError("h_transform_levy needs a finite record horizon or stop level");

  const double mu = std::fabs(law.drift) / law.sigma;
  const double r0 = std::fabs(y0) / law.sigma;
  const double kappa = mu * r0;
  // Direction cosine with density proportional to exp(kappa c) on [-1, 1].
  const double u = rng.uniform();
  double c = kappa > 1e-12 ? 1.0 + std::log(u + (1.0 - u) * std::exp(-2.0 * kappa)) / kappa : 2.0 * u - 1.0;
  c = std::clamp(c, -1.0, 1.0);
  double p[3] = {r0 * c, r0 * std::sqrt(1.0 - c * c), 0.0};

  ConditionedPath out;
  out.path.mesh = opts.mesh;
  out.path.push(0.0, y0, theta0);
  for (std::uint64_t k = 1;; ++k) {
    const double t_prev = out.path.t.back();
    const double t = std::min(static_cast<double>(k) * opts.mesh, opts.record_horizon);
    const double dt = t - t_prev;
    const double sd = std::sqrt(dt);
    p[0] += sd * rng.normal() + mu * dt;
    p[1] += sd * rng.normal();
    p[2] += sd * rng.normal();
    const double xi = -law.sigma * std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
    out.path.push(t, xi, theta0);
    if (t >= opts.record_horizon || xi < -opts.k_stop) break;
  }
  return out;
}

}  // namespace

ConditionedPath sample_conditioned_negative(const MapSpec& dual, double y0, std::uint32_t theta0,
                                            ConditioningScheme scheme, RngStream rng, const ConditionedOptions& opts) {
  if (scheme == ConditioningScheme::h_transform_levy) return h_transform_sample(dual, y0, theta0, rng, opts);
  return rejection_sample(dual, y0, theta0, rng, opts);
}

EntranceSetup prepare_entrance(const MapSpec& spec, double alpha, EmpiricalDist rho_hat,
                               const ConditionedOptions& conditioned) {
  if (!(alpha > 0.0)) throw SpecError("alpha must be positive");
  if (rho_hat.dims() != 4 || rho_hat.empty()) throw SpecError("entrance needs a nonempty (v, y, phi, z) ensemble");
  EntranceSetup s;
  s.spec = spec;
  s.pi = stationary_pi(spec.Q);
  s.dual = build_dual(spec, s.pi);
  s.alpha = alpha;
  s.rho = std::move(rho_hat);
  s.dual_drift = negative_drift_or_throw(s.dual, s.pi, "entrance construction");
  s.conditioned = conditioned;
  s.conditioned.record_horizon = std::numeric_limits<double>::infinity();
  double acc = 0.0;
  for (double w : s.rho.weights()) s.rho_cdf.push_back(acc += w);
  return s;
}

EntranceSample build_entrance_path(const EntranceSetup& setup, RngStream rng) {
  RngStream pick = rng.fork(1);
  const auto it = std::upper_bound(setup.rho_cdf.begin(), setup.rho_cdf.end(), pick.uniform() * setup.rho_cdf.back());
  const auto idx = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - setup.rho_cdf.begin(),
                                                                     static_cast<std::ptrdiff_t>(setup.rho.size()) - 1));
  EntranceSample e;
  e.k_stop = setup.conditioned.k_stop;
  e.eps0 = std::exp(-e.k_stop);
  e.v = static_cast<std::uint32_t>(setup.rho.column(0)[idx]);
  e.y = setup.rho.column(1)[idx];
  e.phi = static_cast<std::uint32_t>(setup.rho.column(2)[idx]);
  e.z = setup.rho.column(3)[idx];
  if (!(e.y < 0.0))
    throw SimulationError("entrance draw has undershoot 0 (a creeping passage); the rejection sampler cannot start at 0");

  const ConditionedPath cp =
      sample_conditioned_negative(setup.dual, e.y, e.v, ConditioningScheme::rejection, rng.fork(0), setup.conditioned);
  e.attempts = cp.attempts;
  LampertiOptions lo;
  lo.mesh = -1.0;
  const SsmpPath ss = lamperti_kiu(cp.path, setup.alpha, lo);
  e.truncation_mass = std::exp(setup.alpha * cp.path.xi.back()) / (setup.alpha * std::fabs(setup.dual_drift));
  e.path = reverse_path(ss);
  e.path.push(e.path.lifetime, std::exp(e.z), e.phi);
  e.path.from_origin = true;
  return e;
}

EmpiricalDist exit_quadruples(const std::vector<SsmpPath>& paths, double radius) {
  std::vector<std::vector<double>> cols(4);
  const double lr = std::log(radius);
  for (const auto& p : paths) {
    const auto q = exit_quadruple(p, radius);
    if (!q) continue;
    cols[0].push_back(q->state_before);
    cols[1].push_back(q->log_r_before - lr);
    cols[2].push_back(q->state_after);
    cols[3].push_back(q->log_r_after - lr);
  }
  return EmpiricalDist(std::move(cols), {"v", "y", "phi", "z"});
}

ConvergenceReport convergence_diagnostic(const MapSpec& spec, double alpha, const std::vector<double>& z_radii,
                                         const std::vector<double>& deltas, std::size_t n, RngStream rng,
                                         const EmpiricalDist& reference, const ConvergenceOptions& opts) {
  if (!(alpha > 0.0)) throw SpecError("alpha must be positive");
  std::vector<double> sorted = deltas;
  std::sort(sorted.begin(), sorted.end());
  if (!sorted.empty() && !(sorted.back() < 1.0)) throw SpecError("deltas must be below 1");
  std::vector<double> levels;
  for (double d : sorted) levels.push_back(std::log(d));
  levels.push_back(0.0);

  ConvergenceReport report;
  report.deltas = sorted;
  for (std::size_t zi = 0; zi < z_radii.size(); ++zi) {
    const double x0 = std::log(z_radii[zi]);
    if (!sorted.empty() && !(x0 < levels.front())) throw SpecError("start radius must be below every delta");
    struct Run {
      std::vector<double> tau;
      PassageRecord exit;
      bool crossed = false;
    };
    const RngStream base = rng.fork(zi);
    const auto runs = parallel_map<Run>(n, opts.jobs, [&](std::size_t i) {
      Run run;
      run.tau.assign(levels.size(), std::numeric_limits<double>::infinity());
      MapWalker walker(spec, x0, opts.theta0, opts.mesh, base.fork(i), false);
      double A = 0.0;
      std::size_t k = 0;
      while (k < levels.size() && walker.alive() && walker.time() < opts.t_max) {
        const WalkStep step = walker.advance(opts.t_max);
        const Segment& s = step.seg;
        for (; k < levels.size() && s.x1 > levels[k]; ++k) {
          run.tau[k] = A + partial_clock(s, alpha, levels[k]);
          if (k + 1 == levels.size()) {
            run.exit.crept = true;
            run.exit.state_before = run.exit.state_after = s.state;
          }
        }
        A += segment_clock(s, alpha);
        if (step.has_event && step.event.kind != EventKind::kill) {
          const MapEvent& ev = step.event;
          for (; k < levels.size() && ev.post_xi > levels[k]; ++k) {
            run.tau[k] = A;
            if (k + 1 == levels.size()) {
              run.exit.undershoot = -ev.pre_xi;
              run.exit.overshoot = ev.post_xi;
              run.exit.state_before = ev.pre_state;
              run.exit.state_after = ev.post_state;
            }
          }
        }
      }
      run.crossed = k == levels.size();
      return run;
    });

    ConvergenceRow row;
    row.z_radius = z_radii[zi];
    std::vector<PassageRecord> exits;
    std::size_t missed = 0;
    for (const auto& r : runs) {
      if (r.crossed)
        exits.push_back(r.exit);
      else
        ++missed;
    }
    if (static_cast<double>(missed) > 0.01 * static_cast<double>(n))
      throw SimulationError(std::to_string(missed) + " of " + std::to_string(n) + " runs from radius " +
                            format_double(z_radii[zi]) + " did not leave the unit ball within t_max");
    row.exit = passage_dist(exits);
    if (!reference.empty()) row.distance = marginal_distance(row.exit, reference);
    std::vector<double> logd, logt, col(n);
    for (std::size_t k = 0; k < sorted.size(); ++k) {
      for (std::size_t i = 0; i < n; ++i) col[i] = std::min(runs[i].tau[k], 1.0);
      const MeanSe m = mean_se(col);
      row.tau_mean.push_back(m.mean);
      row.tau_se.push_back(m.se);
      logd.push_back(std::log(sorted[k]));
      logt.push_back(std::log(m.mean));
    }
    if (sorted.size() >= 2) row.slope = fit_line(logd, logt).slope;
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace ssmp
