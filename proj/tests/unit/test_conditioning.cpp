#include "doctest.h"

#include <cmath>

#include "ssmp/conditioning.hpp"
#include "ssmp/stationary.hpp"

using namespace ssmp;

namespace {

Eigen::MatrixXd two_state_q(double a, double b) {
  Eigen::MatrixXd Q(2, 2);
  Q << -a, a, b, -b;
  return Q;
}

MapSpec brownian(double m) { return validate_spec(MapSpec::levy(OrdinateLaw{m, 1.0, 0.0, JumpLaw::none()})); }

MapSpec entrance_spec() {
  return validate_spec(MapSpec::modulated(two_state_q(1.0, 2.0), {OrdinateLaw{-0.5, 0.0, 2.0, JumpLaw::exponential(1.0)},
                                                                    OrdinateLaw{-1.0, 0.0, 3.0, JumpLaw::exponential(2.0)}}));
}

MapSpec slow_mixing() {
  return validate_spec(MapSpec::modulated(two_state_q(0.2, 0.2), {OrdinateLaw{1.0, 0.0, 0.0, JumpLaw::none()},
                                                                    OrdinateLaw{-0.2, 0.0, 1.0, JumpLaw::exponential(0.5)}}));
}

}  // namespace

TEST_CASE("probability of staying below 0") {
  CHECK(hplus_brownian(-1.0, 1.0, 0.0) == 0.0);
  CHECK(hplus_brownian(-1.0, 1.0, -std::log(2.0) / 2.0) == doctest::Approx(0.5));

  const double y_half = -std::log(2.0) / 2.0;
  const auto est = estimate_Hplus(brownian(-1.0), {y_half, -10.0, 0.0, 0.5}, {0}, 50.0, 20000, rng_fork(1, 0));
  CHECK(std::fabs(est.values[0][0] - 0.5) < 3.0 * est.se[0][0]);
  CHECK(est.values[0][1] >= 0.9999);
  CHECK(est.values[0][2] == 0.0);
  CHECK(est.values[0][3] == 0.0);
  CHECK(est.max_horizon_bias < 0.01);

  CHECK_THROWS_AS(estimate_Hplus(brownian(0.0), {-1.0}, {0}, 50.0, 10, rng_fork(1, 1)), SpecError);
  CHECK_THROWS_AS(estimate_Hplus(brownian(0.3), {-1.0}, {0}, 500.0, 10, rng_fork(1, 1)), SpecError);
  CHECK_THROWS_AS(estimate_Hplus(brownian(-1.0), {-1.0}, {0}, 10.0, 10, rng_fork(1, 1)), SpecError);
}

TEST_CASE("conditioned paths stay negative") {
  ConditionedOptions opts;
  opts.mesh = 1e-2;
  opts.record_horizon = 2.0;
  opts.k_stop = std::numeric_limits<double>::infinity();
  for (auto scheme : {ConditioningScheme::rejection, ConditioningScheme::h_transform_levy}) {
    for (std::size_t i = 0; i < 20; ++i) {
      const auto cp = sample_conditioned_negative(brownian(-1.0), -0.5, 0, scheme, rng_fork(2, i), opts);
      REQUIRE(cp.path.size() > 100);
      for (double x : cp.path.xi) REQUIRE(x < 0.0);
      CHECK(cp.path.t.back() == doctest::Approx(2.0));
    }
  }
  CHECK_THROWS_AS(sample_conditioned_negative(slow_mixing(), -1.0, 0, ConditioningScheme::h_transform_levy,
                                              rng_fork(2, 0), opts),
                  SpecError);
  CHECK_THROWS_AS(
      sample_conditioned_negative(brownian(-1.0), 0.0, 0, ConditioningScheme::rejection, rng_fork(2, 0), opts),
      SpecError);
}

TEST_CASE("rejection and h-transform agree at time 1") {
  ConditionedOptions opts;
  opts.mesh = 1.0;
  opts.record_horizon = 1.0;
  opts.k_stop = std::numeric_limits<double>::infinity();
  const std::size_t n = 3000;
  std::vector<double> a, b;
  for (std::size_t i = 0; i < n; ++i) {
    a.push_back(sample_conditioned_negative(brownian(-1.0), -1.0, 0, ConditioningScheme::rejection, rng_fork(3, i), opts)
                    .path.xi.back());
    b.push_back(sample_conditioned_negative(brownian(-1.0), -1.0, 0, ConditioningScheme::h_transform_levy,
                                            rng_fork(4, i), opts)
                    .path.xi.back());
  }
  CHECK(ks_pvalue(ks_distance(a, b), n, n) > 0.01);
}

TEST_CASE("conditioned path keeps the drift") {
  ConditionedOptions opts;
  opts.mesh = 0.5;
  opts.record_horizon = 200.0;
  opts.k_stop = std::numeric_limits<double>::infinity();
  std::vector<double> rate;
  for (std::size_t i = 0; i < 400; ++i) {
    const auto cp =
        sample_conditioned_negative(brownian(-1.0), -1.0, 0, ConditioningScheme::h_transform_levy, rng_fork(5, i), opts);
    rate.push_back((cp.path.xi.back() - cp.path.xi[cp.path.size() / 2]) / 100.0);
  }
  const MeanSe m = mean_se(rate);
  CHECK(std::fabs(m.mean + 1.0) < 4.0 * m.se + 1e-3);
}

TEST_CASE("entrance paths") {
  const MapSpec spec = entrance_spec();
  const auto rho = estimate_rho(spec, 0, {20.0}, 5000, rng_fork(6, 0));
  ConditionedOptions copts;
  copts.min_acceptance = 1e-7;
  const EntranceSetup setup = prepare_entrance(spec, 1.0, rho.deepest(), copts);
  CHECK(setup.dual_drift < 0.0);
  std::vector<SsmpPath> paths;
  for (std::size_t i = 0; i < 50; ++i) {
    const EntranceSample e = build_entrance_path(setup, rng_fork(7, i));
    const SsmpPath& p = e.path;
    REQUIRE(p.from_origin);
    REQUIRE(p.r.front() <= e.eps0);
    for (std::size_t k = 0; k + 1 < p.size(); ++k) REQUIRE(p.r[k] <= 1.0);
    CHECK(p.r.back() == doctest::Approx(std::exp(e.z)));
    CHECK(p.r[p.size() - 2] == doctest::Approx(std::exp(e.y)));
    CHECK(e.truncation_mass < 1e-4);
    paths.push_back(p);
  }
  const EmpiricalDist q = exit_quadruples(paths, 1.0);
  CHECK(q.size() == paths.size());
  for (std::size_t i = 0; i < q.size(); ++i) CHECK(q.column(1)[i] <= 0.0);
}

TEST_CASE("convergence from small radii") {
  SUBCASE("pure drift has tau_delta = delta - z") {
    const MapSpec spec = validate_spec(MapSpec::levy(OrdinateLaw{1.0, 0.0, 0.0, JumpLaw::none()}));
    const auto rep = convergence_diagnostic(spec, 1.0, {1e-6}, {0.05, 0.1, 0.2, 0.4}, 20, rng_fork(8, 0), {});
    for (std::size_t k = 0; k < rep.deltas.size(); ++k)
      CHECK(rep.rows[0].tau_mean[k] == doctest::Approx(rep.deltas[k] - 1e-6).epsilon(1e-9));
    CHECK(rep.rows[0].slope == doctest::Approx(1.0).epsilon(1e-4));
  }
  SUBCASE("exit law settles") {
    const MapSpec spec = slow_mixing();
    const auto rho = estimate_rho(spec, 0, {30.0}, 20000, rng_fork(8, 1));
    const auto rep = convergence_diagnostic(spec, 1.0, {0.9, 1e-6}, {}, 20000, rng_fork(8, 2), rho.deepest());
    CHECK(rep.rows[1].distance < rep.rows[0].distance);
  }
}
