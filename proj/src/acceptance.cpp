#include "ssmp/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "ssmp/conditioning.hpp"
#include "ssmp/cones.hpp"
#include "ssmp/errors.hpp"
#include "ssmp/fluctuation.hpp"
#include "ssmp/lamperti.hpp"
#include "ssmp/map_path.hpp"
#include "ssmp/parallel.hpp"
#include "ssmp/stationary.hpp"

namespace ssmp {

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::MatrixXd two_state_q(double a, double b) {
  Eigen::MatrixXd Q(2, 2);
  Q << -a, a, b, -b;
  return Q;
}

double exp_cdf(double x) { return x <= 0.0 ? 0.0 : -std::expm1(-x); }

struct Ctx {
  const BatteryOptions& opts;
  CriterionResult& out;
  RngStream rng;
  std::uint64_t seed;

  std::size_t n(double full, std::size_t floor = 200) const {
    return std::max<std::size_t>(floor, static_cast<std::size_t>(std::llround(full * opts.size)));
  }
  void check(std::string name, std::string statistic, double value, std::string rel, double threshold,
             std::vector<std::size_t> sizes, std::string note = {}) {
    out.reports.push_back(TestReport::make(std::move(name), std::move(statistic), value, std::move(rel), threshold,
                                           std::move(sizes), seed, std::move(note)));
  }
  void report(std::string name, std::string statistic, double value, std::vector<std::size_t> sizes,
              std::string note = {}) {
    TestReport r = TestReport::make(std::move(name), std::move(statistic), value, "<",
                                    std::numeric_limits<double>::infinity(), std::move(sizes), seed, std::move(note));
    out.info.push_back(std::move(r));
  }
};

std::string csv(const std::vector<std::string>& names, const std::vector<const std::vector<double>*>& cols) {
  std::ostringstream os;
  for (std::size_t j = 0; j < names.size(); ++j) os << (j ? "," : "") << names[j];
  os << '\n';
  const std::size_t rows = cols.empty() ? 0 : cols[0]->size();
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) os << (j ? "," : "") << format_double((*cols[j])[i]);
    os << '\n';
  }
  return os.str();
}

double two_sample_p(const std::vector<double>& a, const std::vector<double>& b) {
  return ks_pvalue(ks_distance(a, b), a.size(), b.size());
}

MapSpec brownian(double m, double sigma = 1.0) {
  return validate_spec(MapSpec::levy(OrdinateLaw{m, sigma, 0.0, JumpLaw::none()}));
}

// Round trip of the Lamperti-Kiu transform.
void criterion_1(Ctx& c) {
  const MapSpec spec = weakly_reversible_spec();
  const double mesh = 1e-3;
  const std::size_t paths = 100;
  double worst = 0.0;
  for (std::size_t i = 0; i < paths; ++i) {
    const MapPath p = simulate_map(spec, 0.0, static_cast<std::uint32_t>(i % 2), 2.0, mesh, c.rng.fork(i));
    for (double alpha : {0.5, 1.0, 2.0})
      worst = std::max(worst, round_trip_error(p, inverse_lamperti(lamperti_kiu(p, alpha), alpha)));
  }
  c.check("lamperti_round_trip", "max ordinate error", worst, "<", 10 * mesh, {paths});
}

// Exit of the unit ball from c z against the scaled exit from z.
void criterion_2(Ctx& c) {
  const MapSpec spec = validate_spec(MapSpec::levy(OrdinateLaw{-0.5, 0.0, 1.0, JumpLaw::exponential(1.0)}));
  const double alpha = 1.0, scale = 2.0, z = 0.25, mesh = 1e-2;
  const std::size_t n = c.n(1e5);
  LampertiOptions lo;
  lo.mesh = -1.0;
  struct Exit {
    double log_r, time;
  };
  const auto run = [&](double start, double factor, RngStream base) {
    return parallel_map<Exit>(n, c.opts.jobs, [&](std::size_t i) {
      StopRule stop;
      stop.above = std::log(1.0 / factor);
      const MapPath p = simulate_map(spec, std::log(start), 0, 1e4, mesh, base.fork(i), stop);
      const SsmpPath ss = scale_path(lamperti_kiu(p, alpha, lo), factor);
      const auto q = exit_quadruple(ss, 1.0);
      if (!q) throw SimulationError("scaling check: a path did not leave the unit ball");
      return Exit{q->log_r_after, q->time};
    });
  };
  const auto direct = run(scale * z, 1.0, c.rng.fork(0));
  const auto scaled = run(z, scale, c.rng.fork(1));
  std::vector<double> ra, rb, ta, tb;
  for (const auto& e : direct) {
    ra.push_back(e.log_r);
    ta.push_back(e.time);
  }
  for (const auto& e : scaled) {
    rb.push_back(e.log_r);
    tb.push_back(e.time);
  }
  c.check("scaling_exit_radius", "KS p-value, log exit radius", two_sample_p(ra, rb), ">", 0.01, {n, n});
  c.check("scaling_exit_time", "KS p-value, exit time", two_sample_p(ta, tb), ">", 0.01, {n, n});
  c.out.data["scaling_exit.csv"] = csv({"log_r_direct", "time_direct", "log_r_scaled", "time_scaled"},
                                       {&ra, &ta, &rb, &tb});
}

// Brownian motion at an Exp(1/2) time.
void criterion_3(Ctx& c) {
  const MapSpec spec = brownian(0.0);
  const std::size_t n = c.n(1e5);
  ProbeOptions po;
  po.jobs = c.opts.jobs;
  const auto triples = wiener_hopf_probe(spec, 0.5, n, c.rng.fork(0), po);
  std::vector<double> mx, gap, g, rest;
  for (const auto& t : triples) {
    mx.push_back(t.max);
    gap.push_back(t.gap);
    g.push_back(t.argmax);
    rest.push_back(t.horizon - t.argmax);
  }
  c.check("wh_max_exp1", "KS distance of the max to Exp(1)", ks_distance_to(mx, exp_cdf), "<", 0.01, {n});
  const auto corr = [&](const char* name, const std::vector<double>& a, const std::vector<double>& b) {
    const MeanSe r = correlation(a, b);
    c.check(name, "|correlation| / SE", std::fabs(r.mean) / r.se, "<", 3.0, {n});
  };
  corr("wh_max_vs_gap", mx, gap);
  corr("wh_argmax_vs_rest", g, rest);
  corr("wh_max_vs_rest", mx, rest);
  corr("wh_argmax_vs_gap", g, gap);
  c.out.data["wiener_hopf.csv"] = csv({"max", "gap", "argmax", "rest"}, {&mx, &gap, &g, &rest});

  ProbeOptions half = po;
  half.mesh = po.mesh / 2;
  const std::size_t nh = c.n(2e4);
  std::vector<double> mh;
  for (const auto& t : wiener_hopf_probe(spec, 0.5, nh, c.rng.fork(1), half)) mh.push_back(t.max);
  c.report("wh_max_exp1_half_mesh", "KS distance of the max to Exp(1), mesh/2", ks_distance_to(mh, exp_cdf), {nh});
}

// Dual maximum against the primal gap.
void criterion_4(Ctx& c) {
  const MapSpec spec = weakly_reversible_spec();
  const MapSpec dual = build_dual(spec, stationary_pi(spec.Q));
  const std::size_t n = c.n(1e5);
  ProbeOptions po;
  po.jobs = c.opts.jobs;
  std::vector<double> gap, mx;
  for (const auto& t : wiener_hopf_probe(spec, 0.5, n, c.rng.fork(0), po)) gap.push_back(t.gap);
  for (const auto& t : wiener_hopf_probe(dual, 0.5, n, c.rng.fork(1), po)) mx.push_back(t.max);
  c.check("duality_max_vs_gap", "KS p-value", two_sample_p(gap, mx), ">", 0.01, {n, n});
  c.out.data["duality.csv"] = csv({"primal_gap", "dual_max"}, {&gap, &mx});
}

// Stationary overshoots.
void criterion_5(Ctx& c) {
  const std::size_t n = c.n(1e5);
  PassageOptions po;
  po.jobs = c.opts.jobs;
  const auto ens = overshoot_ensemble(exp_jump_spec(1.0, 1.0), 0, 20.0, n, c.rng.fork(0), po);
  const auto& over = ens.dist.column(3);
  c.check("overshoot_exp1", "KS distance to Exp(1) at x = 20", ks_distance_to(over, exp_cdf), "<", 0.02, {n});

  const auto rho = estimate_rho(slow_mixing_spec(), 0, {5.0, 10.0, 20.0}, n, c.rng.fork(1), po);
  const double d5 = rho.distance_to_deepest[0], d10 = rho.distance_to_deepest[1];
  c.check("overshoot_cauchy_to_deepest", "d(5, 20) - d(10, 20)", d5 - d10, ">", 0.0, {n});
  c.check("overshoot_cauchy_consecutive", "d(5, 10) - d(10, 20)",
          rho.consecutive_distance[0] - rho.consecutive_distance[1], ">", 0.0, {n});
  c.report("overshoot_d_5_20", "marginal KS", d5, {n});
  c.report("overshoot_d_10_20", "marginal KS", d10, {n});
  const EmpiricalDist& deep = rho.deepest();
  c.out.data["overshoot_exp1.csv"] = csv({"overshoot"}, {&over});
  c.out.data["rho_level20.csv"] =
      csv({"v", "y", "phi", "z"}, {&deep.column(0), &deep.column(1), &deep.column(2), &deep.column(3)});

  // Flat states carry no grid, so halving the mesh must reproduce the ensemble.
  PassageOptions half = po;
  half.mesh = po.mesh / 2;
  const auto eh = overshoot_ensemble(exp_jump_spec(1.0, 1.0), 0, 20.0, n, c.rng.fork(0), half);
  c.report("overshoot_exp1_half_mesh", "KS distance to Exp(1), mesh/2", ks_distance_to(eh.dist.column(3), exp_cdf),
           {n});
}

// Ladder jump identity.
void criterion_6(Ctx& c) {
  const MapSpec spec = validate_spec(MapSpec::levy(OrdinateLaw{0.0, 1.0, 1.0, JumpLaw::exponential(2.0)}));
  const std::size_t n = c.n(1e6);
  VigonOptions vo;
  vo.jobs = c.opts.jobs;
  const auto t = vigon_check(spec, {0.5, 1.0, 2.0}, n, c.rng.fork(0), vo);
  c.check("vigon_ratio", "max |ratio / mean ratio - 1|", t.max_ratio_deviation, "<", 0.05, {n});
  std::vector<double> y, lhs, se, rhs;
  for (const auto& r : t.rows) {
    y.push_back(r.y);
    lhs.push_back(r.lhs);
    se.push_back(r.lhs_se);
    rhs.push_back(r.rhs);
    c.report("vigon_ratio_y" + format_double(r.y), "LHS / RHS", r.ratio, {n});
  }
  c.out.data["vigon.csv"] = csv({"y", "lhs", "lhs_se", "rhs"}, {&y, &lhs, &se, &rhs});
}

// Long-run behaviour on six specs.
void criterion_7(Ctx& c) {
  struct Case {
    std::string name;
    MapSpec spec;
    double horizon;
    double n;
  };
  std::vector<Case> cases;
  cases.push_back({"drift_plus_one", brownian(1.0), 100.0, 2000});
  cases.push_back({"symmetric_pm1",
                   validate_spec(MapSpec::modulated(two_state_q(1.0, 1.0), {OrdinateLaw{1.0, 0.0, 0.0, JumpLaw::none()},
                                                                            OrdinateLaw{-1.0, 0.0, 0.0, JumpLaw::none()}})),
                   1000.0, 1000});
  cases.push_back({"drifts_1_m3",
                   validate_spec(MapSpec::modulated(two_state_q(1.0, 2.0), {OrdinateLaw{1.0, 0.0, 0.0, JumpLaw::none()},
                                                                            OrdinateLaw{-3.0, 0.0, 0.0, JumpLaw::none()}})),
                   200.0, 2000});
  cases.push_back({"zero_mean_jumps",
                   validate_spec(MapSpec::levy(OrdinateLaw{-1.0, 1.0, 1.0, JumpLaw::exponential(1.0)})), 1000.0, 1000});
  {
    MapSpec s = MapSpec::modulated(two_state_q(1.0, 1.0), {OrdinateLaw{0.5, 0.5, 0.0, JumpLaw::none()},
                                                           OrdinateLaw{-0.2, 0.5, 0.0, JumpLaw::none()}});
    s.switch_jump[0][1] = JumpLaw::point(1.0);
    cases.push_back({"switch_jumps_up", validate_spec(std::move(s)), 200.0, 2000});
  }
  cases.push_back({"two_sided_down",
                   validate_spec(MapSpec::levy(OrdinateLaw{0.2, 0.5, 2.0, JumpLaw::two_sided(2.0, 1.0, 0.5)})), 200.0,
                   2000});

  DriftOptions dopts;
  dopts.jobs = c.opts.jobs;
  std::vector<double> analytic, mean, lo, hi;
  for (std::size_t k = 0; k < cases.size(); ++k) {
    const Case& cs = cases[k];
    const std::size_t n = c.n(cs.n);
    const DriftEstimate est = drift_rate(cs.spec, cs.horizon, n, c.rng.fork(k), dopts);
    const double a = est.analytic;
    const Trichotomy expected = std::fabs(a) < 1e-12 ? Trichotomy::oscillates
                                : a > 0.0            ? Trichotomy::drifts_up
                                                     : Trichotomy::drifts_down;
    const Trichotomy got = classify_trichotomy(est);
    c.check("trichotomy_" + cs.name, "classification matches the analytic drift (1 = yes)", got == expected ? 1.0 : 0.0,
            ">", 0.5, {n}, "expected " + to_string(expected) + ", got " + to_string(got));
    analytic.push_back(a);
    mean.push_back(est.mean);
    lo.push_back(est.lo);
    hi.push_back(est.hi);
  }
  c.out.data["trichotomy.csv"] = csv({"analytic", "mean", "lo", "hi"}, {&analytic, &mean, &lo, &hi});
}

// Conditioning to stay negative.
void criterion_8(Ctx& c) {
  const MapSpec bm = brownian(-1.0);
  const double y = -std::log(2.0) / 2.0;
  const std::size_t n = c.n(1e5);
  HplusOptions ho;
  ho.jobs = c.opts.jobs;
  const auto est = estimate_Hplus(bm, {y}, {0}, 50.0, n, c.rng.fork(0), ho);
  const double closed = hplus_brownian(-1.0, 1.0, y);
  c.check("hplus_half_point", "|estimate - 1/2| / SE", std::fabs(est.values[0][0] - closed) / est.se[0][0], "<", 3.0,
          {n});
  c.report("hplus_horizon_bias", "H(T) - H(2T)", est.max_horizon_bias, {n});
  HplusOptions hh = ho;
  hh.mesh = ho.mesh / 2;
  const auto est_half = estimate_Hplus(bm, {y}, {0}, 50.0, n, c.rng.fork(0), hh);
  c.report("hplus_half_point_half_mesh", "estimate at mesh/2", est_half.values[0][0], {n});

  const std::size_t m = c.n(1e4);
  ConditionedOptions co;
  co.mesh = 1.0;
  co.record_horizon = 1.0;
  co.k_stop = std::numeric_limits<double>::infinity();
  const auto at_one = [&](ConditioningScheme scheme, RngStream base, const ConditionedOptions& o) {
    return parallel_map<double>(m, c.opts.jobs, [&](std::size_t i) {
      return sample_conditioned_negative(bm, -1.0, 0, scheme, base.fork(i), o).path.xi.back();
    });
  };
  const auto rej = at_one(ConditioningScheme::rejection, c.rng.fork(1), co);
  const auto exact = at_one(ConditioningScheme::h_transform_levy, c.rng.fork(2), co);
  c.check("conditioned_two_schemes", "KS p-value of xi_1", two_sample_p(rej, exact), ">", 0.01, {m, m});
  ConditionedOptions ch = co;
  ch.mesh = co.mesh / 2;
  const auto rej_half = at_one(ConditioningScheme::rejection, c.rng.fork(3), ch);
  c.report("conditioned_two_schemes_half_mesh", "KS p-value of xi_1, mesh/2", two_sample_p(rej_half, exact), {m, m});
  c.out.data["conditioned_xi1.csv"] = csv({"rejection", "h_transform"}, {&rej, &exact});
}

// Entrance law from the origin.
void criterion_9(Ctx& c) {
  const MapSpec spec = entrance_spec();
  const double alpha = 1.0, deep = 20.0;
  PassageOptions po;
  po.jobs = c.opts.jobs;
  const std::size_t na = c.n(1e5), nb = c.n(1e4), ne = c.n(1e4);
  const auto rho_a = estimate_rho(spec, 0, {deep}, na, c.rng.fork(0), po);
  const auto rho_b = estimate_rho(spec, 0, {deep}, nb, c.rng.fork(1), po);

  ConditionedOptions co;
  co.mesh = 1e-2;
  co.k_stop = 12.0;
  co.min_acceptance = 1e-7;
  const EntranceSetup setup = prepare_entrance(spec, alpha, rho_a.deepest(), co);
  const RngStream base = c.rng.fork(2);
  const auto samples =
      parallel_map<EntranceSample>(ne, c.opts.jobs, [&](std::size_t i) { return build_entrance_path(setup, base.fork(i)); });
  std::vector<SsmpPath> paths;
  double trunc = 0.0;
  for (const auto& s : samples) {
    paths.push_back(s.path);
    trunc = std::max(trunc, s.truncation_mass);
  }
  c.report("entrance_truncation_mass", "largest truncated clock mass", trunc, {ne});

  const EmpiricalDist& ref = rho_b.deepest();
  const char* names[4] = {"v", "y", "phi", "z"};
  for (double radius : {1.0, std::exp(-1.0)}) {
    const EmpiricalDist q = exit_quadruples(paths, radius);
    if (q.size() != paths.size()) throw SimulationError("entrance path without an exit");
    const std::string tag = radius == 1.0 ? "r1" : "r_e-1";
    for (std::size_t j = 0; j < 4; ++j)
      c.check("entrance_" + tag + "_" + names[j], "KS p-value against an independent deep-passage sample",
              two_sample_p(q.column(j), ref.column(j)), ">", 0.01, {q.size(), ref.size()});
    c.out.data["entrance_exit_" + tag + ".csv"] =
        csv({"v", "y", "phi", "z"}, {&q.column(0), &q.column(1), &q.column(2), &q.column(3)});
  }

  const std::vector<double> deltas{0.05, 0.1, 0.2, 0.4};
  std::vector<double> logd, logt, means;
  for (double d : deltas) {
    std::vector<double> tau;
    for (const auto& p : paths) tau.push_back(std::min(exit_quadruple(p, d)->time, 1.0));
    const double mtau = mean_se(tau).mean;
    means.push_back(mtau);
    logd.push_back(std::log(d));
    logt.push_back(std::log(mtau));
  }
  const double slope = fit_line(logd, logt).slope;
  c.check("entrance_tau_slope", "|slope / alpha - 1|", std::fabs(slope / alpha - 1.0), "<", 0.2, {ne});
  c.out.data["entrance_tau.csv"] = csv({"delta", "mean_tau_min_1"}, {&deltas, &means});

  ConvergenceOptions cv;
  cv.mesh = 1e-2;
  cv.jobs = c.opts.jobs;
  const auto conv = convergence_diagnostic(spec, alpha, {1e-4}, deltas, ne, c.rng.fork(3), ref, cv);
  c.check("small_start_tau_slope", "|slope / alpha - 1| from z = 1e-4", std::fabs(conv.rows[0].slope / alpha - 1.0),
          "<", 0.2, {ne});
  c.report("small_start_exit_distance", "marginal KS of the unit-ball exit from z = 1e-4", conv.rows[0].distance,
           {ne, ref.size()});
}

// Brownian motion in a wedge.
void criterion_10(Ctx& c) {
  double worst = 0.0;
  for (double theta0 : {kPi / 3, kPi / 2, kPi, 3 * kPi / 2})
    worst = std::max(worst, std::fabs(eigen_first_shooting(theta0) / eigen_first(theta0) - 1.0));
  c.check("cone_eigenvalue", "relative error closed form vs shooting", worst, "<", 1e-6, {});
  c.check("cone_exponent_quadrant", "|p(pi/2, 2) - 2|", std::fabs(make_cone(kPi / 2).p - 2.0), "<", 1e-300, {});

  double harm = 0.0;
  for (double theta0 : {kPi / 3, kPi / 2, kPi, 3 * kPi / 2}) {
    const ConeModel m = make_cone(theta0);
    for (double frac : {0.25, 0.5, 0.75})
      for (double r : {0.5, 1.0, 2.0})
        harm = std::max(harm, harmonicity_residual(m, r * std::cos(frac * theta0), r * std::sin(frac * theta0)));
  }
  c.check("cone_harmonicity", "max |discrete Laplacian M| / M", harm, "<", 1e-3, {});

  const std::size_t nm = c.n(1e5);
  const auto quad = martingale_check(make_cone(kPi / 2), 0.4, 0.7, 1.0, nm, c.rng.fork(0), c.opts.jobs);
  c.check("cone_martingale_quadrant", "|E M(B) - M(x)| / SE", std::fabs(quad.mean - quad.target) / quad.se, "<", 3.0,
          {nm});
  const auto halfp = martingale_check(make_cone(kPi), 0.4, 0.7, 1.0, nm, c.rng.fork(1), c.opts.jobs);
  c.check("cone_martingale_half_plane", "|E M(B) - M(x)| / SE", std::fabs(halfp.mean - halfp.target) / halfp.se, "<",
          3.0, {nm});

  const ConeModel wide = make_cone(3 * kPi / 2);
  const std::size_t nd = c.n(2000);
  const MapDrift md = map_time_drift(wide, 1e-3, nd, c.rng.fork(2), {}, c.opts.jobs);
  c.check("cone_map_drift", "|2 slope / psi'(p) - 1|", std::fabs(2.0 * md.slope / md.predicted - 1.0), "<", 0.1, {nd});

  const std::size_t na = c.n(1e5);
  const auto law = apex_exit_law(wide, {1e-1, 1e-2, 1e-3}, na, c.rng.fork(3), {}, 200, c.opts.jobs);
  c.check("cone_apex_cauchy", "bootstrap share with KS(0.1, 0.001) > KS(0.01, 0.001)", law.confidence, ">", 0.95,
          {na, na, na});
  c.report("cone_apex_ks_01", "KS(0.1, 0.001)", law.ks_to_smallest[0], {na, na});
  c.report("cone_apex_ks_001", "KS(0.01, 0.001)", law.ks_to_smallest[1], {na, na});
  const MeanSe ms = mean_se(law.angles.back().column(0));
  c.check("cone_apex_symmetry", "|mean angle - theta0 / 2| / SE", std::fabs(ms.mean - wide.theta0 / 2) / ms.se, "<",
          3.0, {na});
  c.out.data["cone_exit_angles.csv"] = csv({"r0_1e-1", "r0_1e-2", "r0_1e-3"}, {&law.angles[0].column(0),
                                                                              &law.angles[1].column(0),
                                                                              &law.angles[2].column(0)});
}

// Log-gamma by the Stirling series after shifting the argument past 20.
std::complex<double> stirling_log_gamma(std::complex<double> z) {
  std::complex<double> shift = 0.0;
  while (z.real() < 20.0) {
    shift += std::log(z);
    z += 1.0;
  }
  const std::complex<double> z2 = z * z;
  const std::complex<double> series =
      1.0 / (12.0 * z) - 1.0 / (360.0 * z * z2) + 1.0 / (1260.0 * z * z2 * z2) - 1.0 / (1680.0 * z * z2 * z2 * z2);
  return (z - 0.5) * std::log(z) - z + 0.5 * std::log(2.0 * kPi) + series - shift;
}

// Radial exponents of stable processes.
void criterion_11(Ctx& c) {
  const std::complex<double> i(0.0, 1.0);
  std::vector<double> col_a, col_d, col_t, col_re, col_im, col_res;
  for (const auto& [alpha, d] : std::vector<std::pair<double, double>>{{0.5, 2.0}, {1.0, 2.0}, {1.5, 3.0}}) {
    const StableExponents s = stable_exponents(alpha, d);
    double worst = 0.0, worst_oracle = 0.0;
    for (int k = 0; k <= 40; ++k) {
      const double theta = k == 0 ? 0.0 : 0.05 * std::pow(400.0, (k - 1) / 39.0);  // 0 and 0.05 .. 20
      const double res = s.factorization_residual(theta);
      worst = std::max(worst, res);
      const std::complex<double> psi = s.psi(theta);
      if (theta > 0.0) {
        const std::complex<double> oracle =
            std::exp(stirling_log_gamma((-i * theta + alpha) / 2.0) - stirling_log_gamma(-i * theta / 2.0) +
                     stirling_log_gamma((i * theta + d) / 2.0) - stirling_log_gamma((i * theta + d - alpha) / 2.0));
        worst_oracle = std::max(worst_oracle, std::abs(psi - oracle) / std::max(1.0, std::abs(oracle)));
      } else {
        worst_oracle = std::max(worst_oracle, std::abs(psi));
      }
      col_a.push_back(alpha);
      col_d.push_back(d);
      col_t.push_back(theta);
      col_re.push_back(psi.real());
      col_im.push_back(psi.imag());
      col_res.push_back(res);
    }
    const std::string tag = "alpha" + format_double(alpha) + "_d" + format_double(d);
    c.check("stable_factorization_" + tag, "max |psi - kappa kappa_hat|", worst, "<", 1e-10, {41});
    c.check("stable_psi_oracle_" + tag, "max relative gap to a Stirling-series evaluation", worst_oracle, "<", 1e-10,
            {41});
  }
  c.out.data["stable_exponents.csv"] =
      csv({"alpha", "d", "theta", "psi_re", "psi_im", "residual"}, {&col_a, &col_d, &col_t, &col_re, &col_im, &col_res});
}

void write_data(const std::filesystem::path& dir, const std::map<std::string, std::string>& data) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, text] : data) {
    std::ofstream f(dir / name, std::ios::binary);
    f << text;
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
  }
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

// Re-runs of data-producing criteria at reduced size.
void criterion_12(Ctx& c) {
  const std::filesystem::path root = c.opts.data_dir.empty()
                                         ? std::filesystem::temp_directory_path() /
                                               ("ssmp_determinism_" + std::to_string(c.seed))
                                         : c.opts.data_dir / "determinism";
  std::size_t files = 0, identical = 0;
  for (int id : {2, 5, 9, 10}) {
    std::vector<std::map<std::string, std::string>> runs;
    for (unsigned jobs : {1u, 1u, 2u}) {
      BatteryOptions o;
      o.seed = c.opts.seed;
      o.jobs = jobs;
      o.size = 0.02;
      runs.push_back(run_criterion(id, o).data);
    }
    for (std::size_t r = 0; r < runs.size(); ++r) write_data(root / ("c" + std::to_string(id) + "_run" + std::to_string(r)), runs[r]);
    for (const auto& [name, text] : runs[0]) {
      ++files;
      bool same = !text.empty();
      for (std::size_t r = 1; r < runs.size() && same; ++r) {
        const auto a = read_file(root / ("c" + std::to_string(id) + "_run0") / name);
        const auto b = read_file(root / ("c" + std::to_string(id) + "_run" + std::to_string(r)) / name);
        same = a == b && a == text;
      }
      if (same) ++identical;
    }
  }
  c.check("determinism_files", "data files differing between re-runs (1 and 2 workers)",
          static_cast<double>(files - identical), "<", 0.5, {files});
  c.check("determinism_nonempty", "data files compared", static_cast<double>(files), ">", 0.5, {files});
  if (c.opts.data_dir.empty()) std::filesystem::remove_all(root);
}

}  // namespace

MapSpec weakly_reversible_spec() {
  return validate_spec(MapSpec::modulated(two_state_q(1.0, 2.0), {OrdinateLaw{1.0, 1.0, 1.0, JumpLaw::exponential(2.0)},
                                                                    OrdinateLaw{-0.5, 0.5, 0.0, JumpLaw::none()}}));
}

MapSpec exp_jump_spec(double beta, double rate) {
  return validate_spec(MapSpec::levy(OrdinateLaw{0.0, 0.0, rate, JumpLaw::exponential(beta)}));
}

MapSpec slow_mixing_spec() {
  return validate_spec(MapSpec::modulated(two_state_q(0.2, 0.2), {OrdinateLaw{1.0, 0.0, 0.0, JumpLaw::none()},
                                                                    OrdinateLaw{-0.2, 0.0, 1.0, JumpLaw::exponential(0.5)}}));
}

MapSpec entrance_spec() {
  return validate_spec(MapSpec::modulated(two_state_q(1.0, 2.0), {OrdinateLaw{-0.5, 0.0, 2.0, JumpLaw::exponential(1.0)},
                                                                    OrdinateLaw{-1.0, 0.0, 3.0, JumpLaw::exponential(2.0)}}));
}

std::string criterion_title(int id) {
  static const char* titles[kCriteria] = {"Lamperti round trip",
                                          "scaling of the unit-ball exit",
                                          "Wiener-Hopf benchmark for Brownian motion",
                                          "duality of maximum and gap",
                                          "stationary overshoot",
                                          "ladder jump identity",
                                          "trichotomy battery",
                                          "conditioning to stay negative",
                                          "entrance law from the origin",
                                          "Brownian motion in a wedge",
                                          "stable exponent factorization",
                                          "determinism of data files"};
  if (id < 1 || id > kCriteria) throw SpecError("no criterion " + std::to_string(id));
  return titles[id - 1];
}

CriterionResult run_criterion(int id, const BatteryOptions& opts) {
  CriterionResult out;
  out.id = id;
  out.title = criterion_title(id);
  Ctx c{opts, out, rng_fork(opts.seed, static_cast<std::uint64_t>(id)), opts.seed};
  const auto start = std::chrono::steady_clock::now();
  try {
    switch (id) {
      case 1: criterion_1(c); break;
      case 2: criterion_2(c); break;
      case 3: criterion_3(c); break;
      case 4: criterion_4(c); break;
      case 5: criterion_5(c); break;
      case 6: criterion_6(c); break;
      case 7: criterion_7(c); break;
      case 8: criterion_8(c); break;
      case 9: criterion_9(c); break;
      case 10: criterion_10(c); break;
      case 11: criterion_11(c); break;
      case 12: criterion_12(c); break;
    }
  } catch (const std::exception& e) {
    out.reports.push_back(TestReport::make("error", e.what(), 1.0, "<", 0.0, {}, opts.seed));
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.pass = !out.reports.empty() &&
             std::all_of(out.reports.begin(), out.reports.end(), [](const TestReport& r) { return r.pass; });
  if (!opts.data_dir.empty() && !out.data.empty())
    write_data(opts.data_dir, out.data);
  return out;
}

std::vector<CriterionResult> run_battery(const BatteryOptions& opts, std::vector<int> ids,
                                         const std::function<void(const CriterionResult&)>& progress) {
  if (ids.empty())
    for (int k = 1; k <= kCriteria; ++k) ids.push_back(k);
  std::vector<CriterionResult> out;
  for (int id : ids) {
    out.push_back(run_criterion(id, opts));
    if (progress) progress(out.back());
  }
  return out;
}

nlohmann::json to_json(const CriterionResult& r) {
  nlohmann::json j;
  j["id"] = r.id;
  j["title"] = r.title;
  j["pass"] = r.pass;
  j["reports"] = nlohmann::json::array();
  for (const auto& t : r.reports) j["reports"].push_back(to_json(t));
  j["info"] = nlohmann::json::array();
  for (const auto& t : r.info) j["info"].push_back(to_json(t));
  std::vector<std::string> files;
  for (const auto& [name, text] : r.data) files.push_back(name);
  j["data_files"] = files;
  return j;
}

std::string summary_line(const CriterionResult& r) {
  std::ostringstream os;
  os << (r.pass ? "PASS" : "FAIL") << "  " << r.id << "  " << r.title;
  for (const auto& t : r.reports)
    if (!t.pass) {
      os << "  [" << t.name << ": " << t.statistic << " = " << format_double(t.value) << ", need " << t.relation << " "
         << format_double(t.threshold) << "]";
      break;
    }
  os << "  (" << std::fixed;
  os.precision(1);
  os << r.seconds << " s)";
  return os.str();
}

}  // namespace ssmp
