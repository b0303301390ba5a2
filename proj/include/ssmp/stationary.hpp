#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ssmp/fluctuation.hpp"
#include "ssmp/map_spec.hpp"
#include "ssmp/rng.hpp"
#include "ssmp/stats.hpp"

namespace ssmp {

/// Largest KS distance over the 1-d marginals of two clouds with the same columns.
double marginal_distance(const EmpiricalDist& a, const EmpiricalDist& b);

struct RhoEstimate {
  std::vector<double> levels;
  /// Quadruples (v, y, phi, z) at each level, from the same paths.
  std::vector<EmpiricalDist> per_level;
  /// marginal_distance between levels k and k+1.
  std::vector<double> consecutive_distance;
  /// marginal_distance between level k and the deepest level.
  std::vector<double> distance_to_deepest;
  std::size_t not_crossed = 0;

  const EmpiricalDist& deepest() const { return per_level.back(); }
};

/// Each replica walks from (0, theta0) once past every level. More than 1% of
/// replicas missing a level aborts with SimulationError.
RhoEstimate estimate_rho(const MapSpec& spec, std::uint32_t theta0, const std::vector<double>& levels, std::size_t n,
                         RngStream rng, const PassageOptions& opts = {});

/// Overshoot law beta exp(-beta z) of state-independent Exp(beta) upward jumps.
struct ExpOvershootLaw {
  double beta = 1.0;
  double density(double z) const;
  double cdf(double z) const;
};

ExpOvershootLaw rho_ominus_closed_form(double beta);

/// (y, v) = (xi_{tau-} - x, Theta_{tau-}) at level x_deep.
EmpiricalDist sample_rho_oplus(const MapSpec& spec, double x_deep, std::size_t n, RngStream rng,
                               std::uint32_t theta0 = 0, const PassageOptions& opts = {});

struct PiPlusOptions {
  double mesh = 1e-3;
  /// Height each replica climbs; skeleton points below `burn_in` are discarded.
  double height = 20.0;
  double burn_in = 5.0;
  unsigned jobs = 0;
};

struct PiPlusEstimate {
  double h = 0.0;
  std::vector<double> probs;       // skeleton at h
  std::vector<double> se;
  std::vector<double> probs_half;  // skeleton at h / 2
  std::vector<double> se_half;
  /// Total variation between the h and h/2 histograms.
  double tv_half = 0.0;
  std::size_t points = 0;
};

/**
 * State histogram at the ladder-height skeleton: the state at the moment the
 * running maximum first passes k h. Replicas start from pi. Standard errors
 * come from the spread of per-replica histograms.
 */
PiPlusEstimate estimate_pi_plus(const MapSpec& spec, double h, std::size_t n, RngStream rng,
                                const PiPlusOptions& opts = {});

/// Same skeleton from one long run; standard errors by batch means over `batches` height blocks.
PiPlusEstimate pi_plus_long_run(const MapSpec& spec, double h, double height, std::size_t batches, RngStream rng,
                                double mesh = 1e-3);

struct RenewalRow {
  double y = 0.0;
  double lhs = 0.0;
  double lhs_se = 0.0;
  double rhs = 0.0;
};

struct RenewalTable {
  std::vector<RenewalRow> rows;
  double mu_plus = 0.0;
  std::vector<double> pi_plus;
  std::size_t ladder_points = 0;
};

struct RenewalOptions {
  double h_ladder = 1e-2;
  double mesh = 1e-3;
  /// g(v, z) is assumed to vanish outside [0, support].
  double support = 1.0;
  std::size_t quadrature_points = 2000;
  unsigned jobs = 0;
};

/**
 * Ladder points are the epochs where the running maximum first exceeds the
 * previous ladder height by h_ladder or more, each carrying local time
 * h_ladder. LHS(y) = h E[sum g(v_k, y - H_k)] over ladder points (v_k, H_k);
 * RHS = (h / mu) sum_v pi(v) int g(v, z) dz with mu the mean ladder spacing
 * and pi the state histogram at ladder points.
 */
RenewalTable renewal_limit_check(const MapSpec& spec, const std::function<double(std::uint32_t, double)>& g,
                                 const std::vector<double>& y_grid, std::size_t n, RngStream rng,
                                 const RenewalOptions& opts = {});

}  // namespace ssmp
