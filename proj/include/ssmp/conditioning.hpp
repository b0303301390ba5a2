#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ssmp/lamperti.hpp"
#include "ssmp/map_path.hpp"
#include "ssmp/map_spec.hpp"
#include "ssmp/rng.hpp"
#include "ssmp/stats.hpp"

namespace ssmp {

/// P(the ordinate started at (y, theta) never goes above 0), tabulated per state.
struct HplusEstimate {
  std::vector<double> y_grid;
  std::vector<std::uint32_t> states;
  std::vector<std::vector<double>> values;  // [state index][y index]
  std::vector<std::vector<double>> se;
  /// Same estimate with the horizon doubled.
  std::vector<std::vector<double>> values_2T;
  double horizon = 0.0;
  double max_horizon_bias = 0.0;
  std::size_t n = 0;
  std::string method = "horizon-MC";
};

struct HplusOptions {
  /// Gaussian steps use exact bridge maxima, so a coarse mesh loses nothing.
  double mesh = 0.5;
  unsigned jobs = 0;
};

/**
 * One path per replica and state from 0; the translation trick gives every y
 * at once: the path from y stays <= 0 on [0, T] iff y + max_{[0,T]} xi <= 0.
 * Refuses specs whose long-run drift is not negative, and horizons shorter
 * than 50 / |drift|.
 */
HplusEstimate estimate_Hplus(const MapSpec& dual, const std::vector<double>& y_grid,
                             const std::vector<std::uint32_t>& states, double horizon, std::size_t n, RngStream rng,
                             const HplusOptions& opts = {});

/// 1 - exp(-2 |m| |y| / sigma^2) for y < 0 and 0 otherwise: Brownian motion with drift m < 0.
double hplus_brownian(double m, double sigma, double y);

enum class ConditioningScheme { rejection, h_transform_levy };

struct ConditionedOptions {
  double mesh = 1e-3;
  /// Record until this time, or until the path first goes below -k_stop.
  double record_horizon = std::numeric_limits<double>::infinity();
  double k_stop = 12.0;
  /// Rejection: accept paths that stay below 0 through t_check. 0 means 50 / |drift|.
  double t_check = 0.0;
  /// Rejection aborts once this many straight attempts have failed.
  double min_acceptance = 1e-3;
};

struct ConditionedPath {
  MapPath path;
  std::size_t attempts = 1;
};

/**
 * Path under the law conditioned to stay negative. `rejection` works for any
 * spec without killing; `h_transform_levy` is exact and needs a one-state
 * Brownian ordinate with negative drift. It realizes -xi / sigma as the norm of a 3-d
 * Brownian motion with drift |m| / sigma, started at radius |y0| / sigma with the
 * direction law that makes the norm Markov.
 */
ConditionedPath sample_conditioned_negative(const MapSpec& dual, double y0, std::uint32_t theta0,
                                            ConditioningScheme scheme, RngStream rng,
                                            const ConditionedOptions& opts = {});

/// Everything the entrance construction needs, prepared once.
struct EntranceSetup {
  MapSpec spec;
  MapSpec dual;
  Eigen::VectorXd pi;
  double alpha = 1.0;
  /// Deep-level quadruples (v, y, phi, z); draws follow the weights.
  EmpiricalDist rho;
  std::vector<double> rho_cdf;
  double dual_drift = 0.0;
  ConditionedOptions conditioned;
};

EntranceSetup prepare_entrance(const MapSpec& spec, double alpha, EmpiricalDist rho_hat,
                               const ConditionedOptions& conditioned = {});

struct EntranceSample {
  /// Starts at radius <= exp(-k_stop); the last knot is the exit jump to exp(z).
  SsmpPath path;
  double k_stop = 12.0;
  double eps0 = 0.0;
  /// Drawn quadruple; exp(y) is the radius just before the exit jump.
  std::uint32_t v = 0;
  double y = 0.0;
  std::uint32_t phi = 0;
  double z = 0.0;
  /// Estimate of the clock mass cut off below -k_stop: exp(alpha xi_stop) / (alpha |drift|).
  double truncation_mass = 0.0;
  std::size_t attempts = 0;
};

/**
 * Draw (v, y, phi, z) from rho, run the dual conditioned to stay negative from
 * (y, v) until it goes below -k_stop, map it with Lamperti-Kiu (knot images
 * only), reverse time from the truncated lifetime and append the exit jump.
 */
EntranceSample build_entrance_path(const EntranceSetup& setup, RngStream rng);

struct ConvergenceRow {
  double z_radius = 0.0;
  /// Largest marginal KS distance of the radius-1 exit quadruple from the reference.
  double distance = 0.0;
  std::vector<double> tau_mean;  // E[tau_delta ^ 1] per delta
  std::vector<double> tau_se;
  /// Least-squares slope of log E[tau_delta ^ 1] against log delta.
  double slope = 0.0;
  EmpiricalDist exit;
};

struct ConvergenceReport {
  std::vector<double> deltas;
  std::vector<ConvergenceRow> rows;
};

struct ConvergenceOptions {
  std::uint32_t theta0 = 0;
  double mesh = 1e-3;
  double t_max = 1e4;
  unsigned jobs = 0;
};

/**
 * Under P_z for each start radius: the exit quadruple of the unit ball
 * against `reference`, and E[tau_delta ^ 1] for each delta < 1 (delta > z).
 * The clock is integrated exactly on flat pieces and by the trapezoid rule
 * on Gaussian grid steps.
 */
ConvergenceReport convergence_diagnostic(const MapSpec& spec, double alpha, const std::vector<double>& z_radii,
                                         const std::vector<double>& deltas, std::size_t n, RngStream rng,
                                         const EmpiricalDist& reference, const ConvergenceOptions& opts = {});

/// Quadruple columns (v, y, phi, z) of exit_quadruple at `radius`, logs taken relative to log(radius).
EmpiricalDist exit_quadruples(const std::vector<SsmpPath>& paths, double radius);

}  // namespace ssmp
