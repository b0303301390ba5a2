#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "ssmp/errors.hpp"
#include "ssmp/jump_law.hpp"

namespace ssmp {

/// Levy data of the ordinate while the modulator sits in one state:
/// drift, Gaussian scale and a compound-Poisson jump part.
struct OrdinateLaw {
  double drift = 0.0;
  double sigma = 0.0;
  double jump_rate = 0.0;
  JumpLaw jump;

  bool operator==(const OrdinateLaw&) const = default;
};

/**
 * Finite-state Markov additive process: modulating chain with intensity
 * matrix Q, per-state ordinate laws, optional extra jumps at chain switches
 * and an independent exponential killing clock.
 */
struct MapSpec {
  Eigen::MatrixXd Q;
  std::vector<OrdinateLaw> ordinate;
  /// n x n; entry (j, k) is the jump added to the ordinate when the chain moves
  /// from j to k. Diagonal entries are ignored.
  std::vector<std::vector<JumpLaw>> switch_jump;
  double kill_rate = 0.0;

  std::size_t n_states() const noexcept { return ordinate.size(); }

  /// Spec with one state and no switching.
  static MapSpec levy(OrdinateLaw law, double kill_rate = 0.0);
  /// Spec with the given Q and ordinate laws, no switch jumps, no killing.
  static MapSpec modulated(Eigen::MatrixXd Q, std::vector<OrdinateLaw> laws);

  bool operator==(const MapSpec& other) const;
};

/// Returns the spec unchanged if every invariant holds, throws SpecError otherwise.
MapSpec validate_spec(MapSpec spec);

/// Invariant law of an irreducible intensity matrix.
Eigen::VectorXd stationary_pi(const Eigen::MatrixXd& Q);

/// Characteristic exponent of one state: E exp(i lambda xi_t) = exp(-t psi(lambda)).
std::complex<double> levy_exponent(const OrdinateLaw& law, double lambda);

/// diag(-psi_j(lambda)) + (q_jk J_jk(lambda)) - kill_rate I.
Eigen::MatrixXcd matrix_exponent(const MapSpec& spec, double lambda);

/// exp(F(lambda) t): E_{0,j}[exp(i lambda xi_t); Theta_t = k].
Eigen::MatrixXcd transition_transform(const MapSpec& spec, double lambda, double t);

/// Long-run ordinate drift: sum_j pi_j (a_j + rate_j E J_j) + sum_{j!=k} pi_j q_jk E Xi_jk.
double analytic_drift(const MapSpec& spec, const Eigen::VectorXd& pi);

/**
 * Dual MAP with respect to Lebesgue x pi, returned already reflected (the law
 * of (-xi, Theta) under the weakly reversible partner): time-reversed chain
 * pi_k q_kj / pi_j, negated drift, negated state jumps, and switch jump
 * (j, k) equal to the negation of the primal's (k, j).
 */
MapSpec build_dual(const MapSpec& spec, const Eigen::VectorXd& pi);

struct ReversibilityReport {
  double max_residual = 0.0;
  double worst_lambda = 0.0;
  double worst_t = 0.0;
};

/**
 * Max over the grid of the max-abs entry of
 *   exp(F~(lambda) t) - diag(pi)^-1 exp(F(lambda) t)^T diag(pi),
 * where F~(lambda) = F_dual(-lambda) undoes the reflection stored by build_dual.
 */
ReversibilityReport weak_reversibility_check(const MapSpec& spec, const MapSpec& dual,
                                             const Eigen::VectorXd& pi,
                                             const std::vector<double>& lambda_grid,
                                             const std::vector<double>& t_grid);

}  // namespace ssmp
