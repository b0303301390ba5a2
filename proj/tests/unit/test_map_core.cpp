#include "doctest.h"

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "ssmp/map_path.hpp"
#include "ssmp/map_spec.hpp"
#include "ssmp/stats.hpp"

using namespace ssmp;

namespace {

Eigen::MatrixXd mat2(double a, double b, double c, double d) {
  Eigen::MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

OrdinateLaw bm(double a, double s) { return OrdinateLaw{a, s, 0.0, JumpLaw::none()}; }

// Two states with every feature switched on.
MapSpec rich_spec() {
  MapSpec s = MapSpec::modulated(mat2(-1, 1, 2, -2),
                                 {OrdinateLaw{0.5, 1.0, 1.0, JumpLaw::exponential(2.0)},
                                  OrdinateLaw{-1.0, 0.5, 0.7, JumpLaw::two_sided(1.5, 3.0, 0.4)}});
  s.switch_jump[0][1] = JumpLaw::point(0.3);
  s.switch_jump[1][0] = JumpLaw::exponential(4.0, -1);
  return validate_spec(s);
}

}  // namespace

TEST_CASE("validate_spec accepts valid specs") {
  CHECK_NOTHROW(validate_spec(MapSpec::levy(bm(0, 1))));
  CHECK_NOTHROW(validate_spec(MapSpec::modulated(mat2(-1, 1, 2, -2), {bm(0, 1), bm(0, 1)})));
}

TEST_CASE("validate_spec names the offending entry") {
  const auto bad = MapSpec::modulated(mat2(-1, -1, 2, -2), {bm(0, 1), bm(0, 1)});
  CHECK_THROWS_WITH_AS(validate_spec(bad), "negative off-diagonal at (0,1)", SpecError);
  CHECK_THROWS_WITH_AS(validate_spec(MapSpec::modulated(mat2(-1, 1, 2, -1), {bm(0, 1), bm(0, 1)})),
                       doctest::Contains("row 1"), SpecError);
  CHECK_THROWS_WITH_AS(validate_spec(MapSpec::modulated(mat2(-1, 1, 2, -2), {bm(0, 1), bm(0, -1)})),
                       "negative sigma at state 1", SpecError);
  auto neg_rate = MapSpec::levy(OrdinateLaw{0, 1, -1.0, JumpLaw::exponential(1)});
  CHECK_THROWS_WITH_AS(validate_spec(neg_rate), "negative jump rate at state 0", SpecError);
  auto bad_law = MapSpec::levy(OrdinateLaw{0, 1, 1.0, JumpLaw::exponential(-2)});
  CHECK_THROWS_WITH_AS(validate_spec(bad_law), doctest::Contains("malformed jump law at state 0"), SpecError);
}

TEST_CASE("stationary law") {
  Eigen::MatrixXd one = Eigen::MatrixXd::Zero(1, 1);
  CHECK(stationary_pi(one)(0) == 1.0);
  const auto sym = stationary_pi(mat2(-1, 1, 1, -1));
  CHECK(sym(0) == doctest::Approx(0.5).epsilon(1e-14));
  // Hand solution of pi Q = 0: pi_0 = 2 pi_1.
  const auto pi = stationary_pi(mat2(-1, 1, 2, -2));
  CHECK(pi(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(pi(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK_THROWS_AS(stationary_pi(mat2(0, 0, 1, -1)), SpecError);
}

TEST_CASE("matrix exponent closed forms") {
  const auto s = rich_spec();
  const Eigen::MatrixXcd F0 = matrix_exponent(s, 0.0);
  for (int j = 0; j < 2; ++j)
    for (int k = 0; k < 2; ++k) CHECK(F0(j, k) == std::complex<double>(s.Q(j, k), 0.0));
  const auto b = validate_spec(MapSpec::levy(bm(0, 1)));
  for (double l : {0.3, 1.0, 2.5}) {
    const auto F = matrix_exponent(b, l);
    CHECK(F(0, 0).real() == doctest::Approx(-l * l / 2));
    CHECK(F(0, 0).imag() == 0.0);
  }
}

TEST_CASE("semigroup identity by Monte Carlo") {
  // E_{0,j}[exp(i xi_1); Theta_1 = k] against exp(F(1)); one-step mesh is exact
  // because increments between events are Gaussian.
  const auto s = rich_spec();
  const double lambda = 1.0, t = 1.0;
  const Eigen::MatrixXcd P = transition_transform(s, lambda, t);
  const int N = 1000000;
  for (std::uint32_t j = 0; j < 2; ++j) {
    std::vector<double> re[2], im[2];
    for (auto& v : re) v.reserve(N);
    for (auto& v : im) v.reserve(N);
    for (int i = 0; i < N; ++i) {
      MapWalker w(s, 0.0, j, t, rng_fork(77 + j, static_cast<std::uint64_t>(i)));
      while (w.alive() && w.time() < t) w.advance(t);
      for (std::uint32_t k = 0; k < 2; ++k) {
        const bool hit = w.state() == k;
        re[k].push_back(hit ? std::cos(lambda * w.xi()) : 0.0);
        im[k].push_back(hit ? std::sin(lambda * w.xi()) : 0.0);
      }
    }
    for (std::uint32_t k = 0; k < 2; ++k) {
      CAPTURE(j);
      CAPTURE(k);
      const auto r = mean_se(re[k]), m = mean_se(im[k]);
      CHECK(std::fabs(r.mean - P(j, k).real()) < 3 * r.se);
      CHECK(std::fabs(m.mean - P(j, k).imag()) < 3 * m.se);
    }
  }
}

TEST_CASE("dual construction") {
  const auto b = validate_spec(MapSpec::levy(bm(0.7, 1.3)));
  const auto d = build_dual(b, stationary_pi(b.Q));
  CHECK(d.ordinate[0].drift == -0.7);
  CHECK(d.ordinate[0].sigma == 1.3);

  const auto s = rich_spec();
  const auto pi = stationary_pi(s.Q);
  const auto dual = build_dual(s, pi);
  CHECK(dual.Q(0, 1) == doctest::Approx(1.0));
  CHECK(dual.Q(1, 0) == doctest::Approx(2.0));
  CHECK(dual.ordinate[1].jump == s.ordinate[1].jump.negated());
  auto twice = build_dual(dual, pi);
  CHECK((twice.Q - s.Q).cwiseAbs().maxCoeff() < 1e-15);
  twice.Q = s.Q;
  CHECK(twice == s);

  Eigen::VectorXd wrong(2);
  wrong << 0.5, 0.5;
  CHECK_THROWS_WITH_AS(build_dual(s, wrong), "pi is not invariant for Q", SpecError);
}

TEST_CASE("weak reversibility residual") {
  const std::vector<double> ls{-2, -0.5, 0.5, 1, 3}, ts{0.1, 1, 2};
  const auto sym = validate_spec(MapSpec::modulated(mat2(-1, 1, 1, -1), {bm(1, 1), bm(-1, 0.5)}));
  const auto pi = stationary_pi(sym.Q);
  CHECK(weak_reversibility_check(sym, build_dual(sym, pi), pi, ls, ts).max_residual < 1e-10);

  const auto lev = validate_spec(MapSpec::levy(OrdinateLaw{0.3, 1, 2, JumpLaw::exponential(1)}));
  const auto pl = stationary_pi(lev.Q);
  CHECK(weak_reversibility_check(lev, build_dual(lev, pl), pl, ls, ts).max_residual < 1e-14);

  const auto s = rich_spec();
  const auto ps = stationary_pi(s.Q);
  CHECK(weak_reversibility_check(s, build_dual(s, ps), ps, ls, ts).max_residual < 1e-10);
  auto perturbed = build_dual(s, ps);
  perturbed.Q(0, 1) += 0.1;
  perturbed.Q(0, 0) -= 0.1;
  CHECK(weak_reversibility_check(s, perturbed, ps, ls, ts).max_residual > 1e-3);
}

TEST_CASE("zero and pure-drift paths") {
  const auto zero = validate_spec(MapSpec::levy(bm(0, 0)));
  const auto p = simulate_map(zero, 1.5, 0, 2.0, 1e-3, rng_fork(1, 1));
  for (std::size_t i = 0; i < p.size(); ++i) {
    REQUIRE(p.xi[i] == 1.5);
    REQUIRE(p.theta[i] == 0);
  }
  CHECK(p.t.back() == 2.0);
  const auto drift = validate_spec(MapSpec::levy(bm(1, 0)));
  const auto q = simulate_map(drift, 0.25, 0, 3.0, 1e-3, rng_fork(1, 2));
  CHECK(q.xi.back() == 0.25 + 3.0);
  CHECK(q.size() == 3001);
}

TEST_CASE("path invariants") {
  const auto s = rich_spec();
  const auto p = simulate_map(s, 0.0, 0, 5.0, 1e-3, rng_fork(4, 0));
  for (std::size_t i = 1; i < p.size(); ++i) REQUIRE(p.t[i] >= p.t[i - 1]);
  for (std::size_t e = 1; e < p.events.size(); ++e) REQUIRE(p.events[e].time > p.events[e - 1].time);
  CHECK(!p.events.empty());
  // Every ordinate move at an event appears as two knots at the event time.
  for (const auto& ev : p.events) {
    const auto it = std::lower_bound(p.t.begin(), p.t.end(), ev.time);
    REQUIRE(it != p.t.end());
    const auto i = static_cast<std::size_t>(it - p.t.begin());
    CHECK(p.xi[i] == ev.pre_xi);
    CHECK(p.xi[i + 1] == ev.post_xi);
  }
}

TEST_CASE("translation invariance") {
  const auto s = rich_spec();
  const auto a = simulate_map(s, 0.0, 1, 4.0, 1e-3, rng_fork(8, 2));
  const auto b = simulate_map(s, 3.5, 1, 4.0, 1e-3, rng_fork(8, 2));
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a.t[i] == b.t[i]);
    REQUIRE(a.theta[i] == b.theta[i]);
    REQUIRE(std::fabs(b.xi[i] - a.xi[i] - 3.5) < 1e-12);
  }
}

TEST_CASE("killing") {
  auto s = rich_spec();
  s.kill_rate = 2.0;
  const auto p = simulate_map(s, 0.0, 0, 100.0, 1e-2, rng_fork(5, 0));
  CHECK(p.killed());
  CHECK(p.t.back() <= p.lifetime);
  CHECK(p.events.back().kind == EventKind::kill);
  CHECK(matrix_exponent(s, 0.0)(0, 0).real() == doctest::Approx(-3.0));
}

TEST_CASE("symmetric modulated drift has zero mean") {
  const auto s = validate_spec(MapSpec::modulated(mat2(-1, 1, 1, -1), {bm(1, 0), bm(-1, 0)}));
  std::vector<double> end(100000);
  for (std::size_t i = 0; i < end.size(); ++i) {
    const std::uint32_t start = i % 2;
    MapWalker w(s, 0.0, start, 10.0, rng_fork(6, i), false);
    while (w.time() < 10.0) w.advance(10.0);
    end[i] = w.xi();
  }
  const auto m = mean_se(end);
  CHECK(std::fabs(m.mean) < 3 * m.se);
}

TEST_CASE("Markov property at grid times") {
  const auto s = rich_spec();
  const double sgrid = 1.0, t = 0.5;
  std::vector<double> later, fresh;
  for (std::uint64_t i = 0; later.size() < 100000; ++i) {
    MapWalker w(s, 0.0, 0, 0.25, rng_fork(12, i));
    while (w.time() < sgrid) w.advance(sgrid);
    if (w.state() != 1) continue;
    const double base = w.xi();
    while (w.time() < sgrid + t) w.advance(sgrid + t);
    later.push_back(w.xi() - base);
  }
  for (std::uint64_t i = 0; fresh.size() < 100000; ++i) {
    MapWalker w(s, 0.0, 1, 0.25, rng_fork(13, i));
    while (w.time() < t) w.advance(t);
    fresh.push_back(w.xi());
  }
  const double d = ks_distance(later, fresh);
  CHECK(ks_pvalue(d, later.size(), fresh.size()) > 0.01);
}

TEST_CASE("bridge extremes") {
  const Segment s{0.0, 1.0, 0.0, 0.5, 1.0, 0};
  CHECK(bridge_max(s, 0.999999999) >= 0.5);
  CHECK(bridge_min(s, 0.5) <= 0.0);
  CHECK(bridge_cross_probability(s, 0.4) == 1.0);
  // P(max > m) = exp(-2 m (m - b) / h) for a standard bridge from 0 to b.
  CHECK(bridge_cross_probability(s, 1.0) == doctest::Approx(std::exp(-2.0 * 1.0 * 0.5)));
  RngStream r(1, 1);
  int above = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) above += bridge_max(s, r.uniform()) > 1.0;
  const double p = std::exp(-1.0);
  CHECK(std::fabs(above / double(n) - p) < 4 * std::sqrt(p * (1 - p) / n));
}
