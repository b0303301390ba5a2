#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "ssmp/fluctuation.hpp"
#include "ssmp/map_spec.hpp"

using namespace ssmp;

namespace {

MapSpec drift_only(double a, double sigma = 0.0) { return validate_spec(MapSpec::levy(OrdinateLaw{a, sigma, 0.0, JumpLaw::none()})); }

MapSpec poisson_up(double beta, double rate) {
  return validate_spec(MapSpec::levy(OrdinateLaw{0.0, 0.0, rate, JumpLaw::exponential(beta)}));
}

Eigen::MatrixXd two_state_q(double a, double b) {
  Eigen::MatrixXd Q(2, 2);
  Q << -a, a, b, -b;
  return Q;
}

// Slowly mixing chain; only state 1 jumps, so the passage law keeps memory of the start.
MapSpec slow_mixing() {
  return validate_spec(MapSpec::modulated(two_state_q(0.2, 0.2), {OrdinateLaw{1.0, 0.0, 0.0, JumpLaw::none()},
                                                                    OrdinateLaw{-0.2, 0.0, 1.0, JumpLaw::exponential(0.5)}}));
}

MapSpec wr_battery() {
  return validate_spec(MapSpec::modulated(two_state_q(1.0, 2.0), {OrdinateLaw{1.0, 1.0, 1.0, JumpLaw::exponential(2.0)},
                                                                    OrdinateLaw{-0.5, 0.5, 0.0, JumpLaw::none()}}));
}

double exp_cdf(double x) { return x <= 0.0 ? 0.0 : -std::expm1(-x); }

double max_marginal_ks(const EmpiricalDist& a, const EmpiricalDist& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.dims(); ++i) d = std::max(d, ks_distance(a.marginal(i), b.marginal(i)));
  return d;
}

}  // namespace

TEST_CASE("unit drift reaches 2 at time 2 by creeping") {
  const auto out = first_passage(drift_only(1.0), 0.0, 0, 2.0, rng_fork(1, 0));
  REQUIRE(out.records[0]);
  const PassageRecord& r = *out.records[0];
  CHECK(r.time == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(r.undershoot == 0.0);
  CHECK(r.overshoot == 0.0);
  CHECK(r.crept);
}

TEST_CASE("level below the start is passed at time 0") {
  const auto out = first_passage(drift_only(0.0, 1.0), 1.0, 0, 0.5, rng_fork(1, 0));
  REQUIRE(out.records[0]);
  CHECK(out.records[0]->time <= 1e-3);
}

TEST_CASE("not crossed within t_max carries the partial maximum") {
  PassageOptions opts;
  opts.t_max = 5.0;
  const auto out = first_passage(drift_only(-1.0), 0.0, 0, 1.0, rng_fork(1, 0), opts);
  CHECK_FALSE(out.records[0]);
  CHECK(out.max_seen == 0.0);
  CHECK(out.time_simulated == 5.0);
}

TEST_CASE("compound Poisson overshoot is Exp(1)") {
  const auto ens = overshoot_ensemble(poisson_up(1.0, 1.0), 0, 5.0, 100000, rng_fork(2, 0));
  REQUIRE(ens.records.size() == 100000);
  const auto& z = ens.dist.column(ens.dist.index_of("z"));
  CHECK(ks_distance_to(z, exp_cdf) < 0.01);
}

TEST_CASE("Gaussian ordinate always creeps") {
  PassageOptions opts;
  opts.bridge = true;
  const auto ens = overshoot_ensemble(drift_only(0.5, 1.0), 0, 2.0, 2000, rng_fork(3, 0), opts);
  for (const auto& r : ens.records) {
    REQUIRE(r.crept);
    REQUIRE(r.overshoot == 0.0);
  }
}

TEST_CASE("passage records satisfy the stored invariants") {
  const auto ens = overshoot_ensemble(wr_battery(), 1, 3.0, 5000, rng_fork(4, 0));
  std::size_t jumps = 0;
  for (const auto& r : ens.records) {
    REQUIRE(r.undershoot >= 0.0);
    REQUIRE(r.overshoot >= 0.0);
    if (r.crept) {
      REQUIRE(r.overshoot == 0.0);
      REQUIRE(r.state_before == r.state_after);
    } else {
      ++jumps;
    }
  }
  CHECK(jumps > 0);
  CHECK(jumps < ens.records.size());
}

TEST_CASE("too many non-crossings abort") {
  PassageOptions opts;
  opts.t_max = 1.0;
  CHECK_THROWS_AS(overshoot_ensemble(drift_only(-1.0, 0.1), 0, 1.0, 1000, rng_fork(5, 0), opts), SimulationError);
}

TEST_CASE("overshoot laws settle as the level grows") {
  const MapSpec spec = slow_mixing();
  const std::vector<double> levels{2.0, 10.0, 20.0};
  const std::size_t n = 20000;
  std::vector<std::vector<PassageRecord>> per_level(levels.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto out = first_passages(spec, 0.0, 0, levels, rng_fork(6, i));
    for (std::size_t k = 0; k < levels.size(); ++k) {
      REQUIRE(out.records[k]);
      per_level[k].push_back(*out.records[k]);
    }
  }
  const auto d2 = max_marginal_ks(passage_dist(per_level[0]), passage_dist(per_level[2]));
  const auto d10 = max_marginal_ks(passage_dist(per_level[1]), passage_dist(per_level[2]));
  CHECK(d10 < d2);
}

TEST_CASE("Wiener-Hopf benchmark for Brownian motion") {
  const auto triples = wiener_hopf_probe(drift_only(0.0, 1.0), 0.5, 100000, rng_fork(7, 0));
  std::vector<double> mx, gap, g, rest;
  for (const auto& t : triples) {
    REQUIRE(t.gap >= 0.0);
    REQUIRE(t.argmax >= 0.0);
    REQUIRE(t.argmax <= t.horizon);
    mx.push_back(t.max);
    gap.push_back(t.gap);
    g.push_back(t.argmax);
    rest.push_back(t.horizon - t.argmax);
  }
  // psi(lambda) = lambda^2 / 2 = q at lambda = 1.
  CHECK(ks_distance_to(mx, exp_cdf) < 0.01);
  const auto c1 = correlation(mx, gap);
  const auto c2 = correlation(g, rest);
  const auto c3 = correlation(mx, rest);
  const auto c4 = correlation(g, gap);
  CHECK(std::fabs(c1.mean) < 3.0 * c1.se);
  CHECK(std::fabs(c2.mean) < 3.0 * c2.se);
  CHECK(std::fabs(c3.mean) < 3.0 * c3.se);
  CHECK(std::fabs(c4.mean) < 3.0 * c4.se);
}

TEST_CASE("dual maximum matches the primal gap") {
  const MapSpec spec = wr_battery();
  const MapSpec dual = build_dual(spec, stationary_pi(spec.Q));
  const std::size_t n = 20000;
  const auto primal = wiener_hopf_probe(spec, 0.5, n, rng_fork(8, 0));
  const auto dualt = wiener_hopf_probe(dual, 0.5, n, rng_fork(8, 1));
  std::vector<double> gap, mx;
  for (const auto& t : primal) gap.push_back(t.gap);
  for (const auto& t : dualt) mx.push_back(t.max);
  CHECK(ks_pvalue(ks_distance(gap, mx), n, n) > 0.01);
  // The primal maximum itself differs from the gap law here.
  std::vector<double> pmx;
  for (const auto& t : primal) pmx.push_back(t.max);
  CHECK(ks_pvalue(ks_distance(gap, pmx), n, n) < 1e-6);
}

TEST_CASE("long-run drift") {
  SUBCASE("one state") {
    const auto est = drift_rate(drift_only(0.7, 1.0), 100.0, 2000, rng_fork(9, 0));
    CHECK(est.analytic == doctest::Approx(0.7));
    CHECK(std::fabs(est.mean - 0.7) < 3.0 * est.se);
    CHECK(classify_trichotomy(est) == Trichotomy::drifts_up);
  }
  SUBCASE("symmetric +-1") {
    const MapSpec spec = validate_spec(MapSpec::modulated(
        two_state_q(1.0, 1.0), {OrdinateLaw{1.0, 0.0, 0.0, JumpLaw::none()}, OrdinateLaw{-1.0, 0.0, 0.0, JumpLaw::none()}}));
    const auto est = drift_rate(spec, 1000.0, 1000, rng_fork(9, 1));
    CHECK(est.analytic == 0.0);
    CHECK(std::fabs(est.mean) < 3.0 * est.se);
    // Speed-1 drifts spread like sqrt(T), so some runs stay inside +-5 at T = 1000.
    CHECK(est.both_exceed > est.both_exceed_quarter);
    CHECK(est.both_exceed > 0.5);
    CHECK(classify_trichotomy(est) == Trichotomy::oscillates);
  }
  SUBCASE("drifts 1 and -3") {
    const MapSpec spec = validate_spec(MapSpec::modulated(
        two_state_q(1.0, 2.0), {OrdinateLaw{1.0, 0.0, 0.0, JumpLaw::none()}, OrdinateLaw{-3.0, 0.0, 0.0, JumpLaw::none()}}));
    const auto est = drift_rate(spec, 200.0, 2000, rng_fork(9, 2));
    CHECK(est.analytic == doctest::Approx(-1.0 / 3.0));
    CHECK(std::fabs(est.mean + 1.0 / 3.0) < 3.0 * est.se);
    CHECK(classify_trichotomy(est) == Trichotomy::drifts_down);
  }
  SUBCASE("horizon must cover many holding times") {
    const MapSpec spec = validate_spec(MapSpec::modulated(
        two_state_q(0.1, 0.1), {OrdinateLaw{1.0, 0.0, 0.0, JumpLaw::none()}, OrdinateLaw{-1.0, 0.0, 0.0, JumpLaw::none()}}));
    CHECK_THROWS_AS(drift_rate(spec, 100.0, 10, rng_fork(9, 3)), SpecError);
  }
}

TEST_CASE("trichotomy rule on hand-made estimates") {
  DriftEstimate e;
  e.mean = -1.0 / 3.0;
  e.lo = -0.34;
  e.hi = -0.32;
  CHECK(classify_trichotomy(e) == Trichotomy::drifts_down);
  e.mean = 0.0;
  e.lo = -1.0;
  e.hi = 1.0;
  CHECK(classify_trichotomy(e) == Trichotomy::inconclusive);
  e.lo = -0.01;
  e.hi = 0.01;
  e.both_exceed = 0.9;
  e.both_exceed_quarter = 0.7;
  e.median_max_end = 20.0;
  e.median_max_quarter = 10.0;
  e.median_negmin_end = 20.0;
  e.median_negmin_quarter = 10.0;
  CHECK(classify_trichotomy(e) == Trichotomy::oscillates);
  e.median_max_end = 5.0;
  CHECK(classify_trichotomy(e) == Trichotomy::inconclusive);
}

TEST_CASE("ladder jump identity") {
  const std::vector<double> ys{0.5, 1.0, 2.0};
  SUBCASE("no upward jumps gives zero on both sides") {
    const MapSpec spec = validate_spec(MapSpec::levy(OrdinateLaw{0.0, 1.0, 1.0, JumpLaw::exponential(2.0, -1)}));
    const auto t = vigon_check(spec, ys, 20000, rng_fork(10, 0));
    for (const auto& row : t.rows) {
      CHECK(row.lhs == 0.0);
      CHECK(row.rhs == 0.0);
    }
  }
  SUBCASE("Brownian motion with Exp(2) upward jumps") {
    const MapSpec spec = validate_spec(MapSpec::levy(OrdinateLaw{0.0, 1.0, 1.0, JumpLaw::exponential(2.0)}));
    const auto t = vigon_check(spec, ys, 1000000, rng_fork(10, 1));
    CHECK(t.max_ratio_deviation < 0.05);
    // The right side has the exact exp(-2 y) shape.
    CHECK(t.rows[1].rhs / t.rows[0].rhs == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
    const auto small = vigon_check(spec, ys, 250000, rng_fork(10, 2));
    for (std::size_t j = 0; j < ys.size(); ++j) {
      const double shrink = t.rows[j].lhs_se / small.rows[j].lhs_se;
      CHECK(shrink > 0.4);
      CHECK(shrink < 0.6);
    }
  }
}
