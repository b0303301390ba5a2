#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ssmp/map_spec.hpp"
#include "ssmp/rng.hpp"
#include "ssmp/stats.hpp"

namespace ssmp {

/// First strict up-crossing of `level`. Crept means the continuous part did it.
struct PassageRecord {
  double level = 0.0;
  double time = 0.0;
  double undershoot = 0.0;  // level - xi_{tau-}
  double overshoot = 0.0;   // xi_tau - level
  std::uint32_t state_before = 0;
  std::uint32_t state_after = 0;
  bool crept = false;
};

struct PassageOptions {
  double mesh = 1e-3;
  double t_max = 1e4;
  /// Sample the Brownian-bridge maximum of each Gaussian step instead of only
  /// looking at grid points.
  bool bridge = false;
  unsigned jobs = 0;
};

struct PassageOutcome {
  /// One entry per requested level; empty where the level was not crossed.
  std::vector<std::optional<PassageRecord>> records;
  double max_seen = 0.0;
  double time_simulated = 0.0;
  bool killed = false;
};

/// Walks once and records the first passage over every level (increasing order).
PassageOutcome first_passages(const MapSpec& spec, double x0, std::uint32_t theta0, const std::vector<double>& levels,
                              RngStream rng, const PassageOptions& opts = {});

PassageOutcome first_passage(const MapSpec& spec, double x0, std::uint32_t theta0, double level, RngStream rng,
                             const PassageOptions& opts = {});

/// Columns v (state before), y = -undershoot, phi (state after), z = overshoot.
EmpiricalDist passage_dist(const std::vector<PassageRecord>& records);

struct OvershootEnsemble {
  EmpiricalDist dist;
  std::vector<PassageRecord> records;
  std::size_t not_crossed = 0;
};

/// N replicas from (0, theta0); replica i uses rng.fork(i). More than 1% of
/// replicas failing to cross aborts with SimulationError.
OvershootEnsemble overshoot_ensemble(const MapSpec& spec, std::uint32_t theta0, double level, std::size_t n,
                                     RngStream rng, const PassageOptions& opts = {});

/// Running-maximum data at the horizon t = e_q.
struct MaxTriple {
  double horizon = 0.0;
  double max = 0.0;
  double argmax = 0.0;
  std::uint32_t state_at_max = 0;
  double gap = 0.0;  // max - xi_t
  double end_value = 0.0;
  std::uint32_t start_state = 0;
  std::uint32_t end_state = 0;
};

struct ProbeOptions {
  double mesh = 1e-3;
  /// Start each replica from a pi-distributed state; otherwise from theta0.
  bool start_from_pi = true;
  std::uint32_t theta0 = 0;
  /// Exact bridge maxima inside Gaussian steps. The argmax inside a step is
  /// placed at its midpoint.
  bool bridge = true;
  unsigned jobs = 0;
};

std::vector<MaxTriple> wiener_hopf_probe(const MapSpec& spec, double q, std::size_t n, RngStream rng,
                                         const ProbeOptions& opts = {});

/// Draws a state from a probability vector.
std::uint32_t draw_state(const Eigen::VectorXd& p, RngStream& rng);

struct DriftEstimate {
  double mean = 0.0;
  double se = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double analytic = 0.0;
  double horizon = 0.0;
  std::size_t n = 0;
  /// Fraction of runs where both the running max and minus the running min exceed
  /// `excursion_level` by the horizon.
  double both_exceed = 0.0;
  double both_exceed_quarter = 0.0;
  double excursion_level = 5.0;
  double median_max_quarter = 0.0;
  double median_max_end = 0.0;
  double median_negmin_quarter = 0.0;
  double median_negmin_end = 0.0;
};

struct DriftOptions {
  double mesh = 0.1;
  double z = 3.0;
  double excursion_level = 5.0;
  unsigned jobs = 0;
};

/// xi_T / T over N replicas started from pi, with a z-score interval.
DriftEstimate drift_rate(const MapSpec& spec, double horizon, std::size_t n, RngStream rng,
                         const DriftOptions& opts = {});

enum class Trichotomy { drifts_up, oscillates, drifts_down, inconclusive };

std::string to_string(Trichotomy t);

struct TrichotomyOptions {
  /// Widest interval around 0 still accepted as evidence of oscillation.
  double max_ci_width = 0.1;
};

/// Oscillation needs 0 inside a narrow interval and the excursion statistics
/// (medians of max and -min, and the fraction of runs past the level on both
/// sides) all growing from T/4 to T.
Trichotomy classify_trichotomy(const DriftEstimate& est, const TrichotomyOptions& opts = {});

struct VigonRow {
  double y = 0.0;
  double lhs = 0.0;
  double lhs_se = 0.0;
  double rhs = 0.0;
  double rhs_se = 0.0;
  double ratio = 0.0;
  double ratio_se = 0.0;
};

struct VigonTable {
  std::vector<VigonRow> rows;
  /// max_y |ratio(y) / mean ratio - 1|; 0 when both sides vanish.
  double max_ratio_deviation = 0.0;
  std::size_t n = 0;
  double horizon = 0.0;
  double h_ladder = 0.0;
};

struct VigonOptions {
  double horizon = 1.0;
  double h_ladder = 1e-2;
  unsigned jobs = 0;
};

/**
 * Levy case of the ladder jump identity. LHS(y) counts jumps that set a new
 * maximum by more than y; RHS(y) integrates the closed-form tail Pi(z + y, inf)
 * against the occupation of new-minimum levels binned at h_ladder. Both are per
 * path on [0, horizon], so only their ratio is normalization free.
 */
VigonTable vigon_check(const MapSpec& levy_spec, const std::vector<double>& y_grid, std::size_t n, RngStream rng,
                       const VigonOptions& opts = {});

}  // namespace ssmp
