#include "ssmp/map_spec.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <string>

namespace ssmp {

namespace {

std::string idx(std::size_t j, std::size_t k) {
  return "(" + std::to_string(j) + "," + std::to_string(k) + ")";
}

bool irreducible(const Eigen::MatrixXd& Q) {
  const auto n = static_cast<std::size_t>(Q.rows());
  // Strongly connected iff every state reaches 0 and 0 reaches every state.
  const auto reach_all = [&](bool transpose) {
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const std::size_t j = stack.back();
      stack.pop_back();
      for (std::size_t k = 0; k < n; ++k) {
        const double rate = transpose ? Q(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j))
                                      : Q(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
        if (k != j && rate > 0.0 && !seen[k]) {
          seen[k] = 1;
          stack.push_back(k);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
  };
  return reach_all(false) && reach_all(true);
}

}  // namespace

MapSpec MapSpec::levy(OrdinateLaw law, double kill_rate) {
  MapSpec s;
  s.Q = Eigen::MatrixXd::Zero(1, 1);
  s.ordinate = {std::move(law)};
  s.switch_jump = {{JumpLaw::none()}};
  s.kill_rate = kill_rate;
  return s;
}

MapSpec MapSpec::modulated(Eigen::MatrixXd Q, std::vector<OrdinateLaw> laws) {
  MapSpec s;
  const auto n = laws.size();
  s.Q = std::move(Q);
  s.ordinate = std::move(laws);
  s.switch_jump.assign(n, std::vector<JumpLaw>(n, JumpLaw::none()));
  return s;
}

bool MapSpec::operator==(const MapSpec& other) const {
  return Q.rows() == other.Q.rows() && Q.cols() == other.Q.cols() && Q == other.Q &&
         ordinate == other.ordinate && switch_jump == other.switch_jump && kill_rate == other.kill_rate;
}

MapSpec validate_spec(MapSpec spec) {
  const std::size_t n = spec.n_states();
  if (n == 0) throw SpecError("spec has no states");
  if (static_cast<std::size_t>(spec.Q.rows()) != n || static_cast<std::size_t>(spec.Q.cols()) != n)
    throw SpecError("Q must be " + std::to_string(n) + "x" + std::to_string(n));
  if (spec.switch_jump.empty()) spec.switch_jump.assign(n, std::vector<JumpLaw>(n, JumpLaw::none()));
  if (spec.switch_jump.size() != n)
    throw SpecError("switch_jump must have " + std::to_string(n) + " rows");
  for (std::size_t j = 0; j < n; ++j) {
    if (spec.switch_jump[j].size() != n)
      throw SpecError("switch_jump row " + std::to_string(j) + " must have " + std::to_string(n) + " entries");
    double row = 0.0;
    double scale = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double q = spec.Q(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
      if (!std::isfinite(q)) throw SpecError("non-finite intensity at " + idx(j, k));
      if (j != k && q < 0.0) throw SpecError("negative off-diagonal at " + idx(j, k));
      row += q;
      scale += std::fabs(q);
    }
    if (std::fabs(row) > 1e-12 * std::max(1.0, scale))
      throw SpecError("row " + std::to_string(j) + " of Q does not sum to zero (sum " + std::to_string(row) + ")");
    const OrdinateLaw& law = spec.ordinate[j];
    if (!std::isfinite(law.drift)) throw SpecError("non-finite drift at state " + std::to_string(j));
    if (!(law.sigma >= 0.0) || !std::isfinite(law.sigma))
      throw SpecError("negative sigma at state " + std::to_string(j));
    if (!(law.jump_rate >= 0.0) || !std::isfinite(law.jump_rate))
      throw SpecError("negative jump rate at state " + std::to_string(j));
    law.jump.validate("state " + std::to_string(j));
    for (std::size_t k = 0; k < n; ++k)
      if (k != j) spec.switch_jump[j][k].validate("switch " + idx(j, k));
  }
  if (!(spec.kill_rate >= 0.0) || !std::isfinite(spec.kill_rate)) throw SpecError("negative kill_rate");
  return spec;
}

Eigen::VectorXd stationary_pi(const Eigen::MatrixXd& Q) {
  const Eigen::Index n = Q.rows();
  if (n == 0 || Q.cols() != n) throw SpecError("intensity matrix must be square and non-empty");
  if (n == 1) return Eigen::VectorXd::Ones(1);
  if (!irreducible(Q)) throw SpecError("intensity matrix is reducible; invariant law is not unique");
  // pi Q = 0 with sum(pi) = 1: swap the last row of Q^T pi = 0 for the normalization.
  Eigen::MatrixXd A = Q.transpose();
  A.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(n - 1) = 1.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (lu.rank() < n) throw SpecError("intensity matrix is singular beyond rank one");
  Eigen::VectorXd pi = lu.solve(b);
  for (Eigen::Index j = 0; j < n; ++j)
    if (!(pi(j) > 0.0)) throw SpecError("invariant law has non-positive mass at state " + std::to_string(j));
  return pi / pi.sum();
}

std::complex<double> levy_exponent(const OrdinateLaw& law, double lambda) {
  const std::complex<double> i(0.0, 1.0);
  std::complex<double> psi = -i * law.drift * lambda + 0.5 * law.sigma * law.sigma * lambda * lambda;
  if (law.jump_rate > 0.0) psi += law.jump_rate * (1.0 - law.jump.characteristic(lambda));
  return psi;
}

Eigen::MatrixXcd matrix_exponent(const MapSpec& spec, double lambda) {
  const auto n = static_cast<Eigen::Index>(spec.n_states());
  Eigen::MatrixXcd F(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = 0; k < n; ++k) {
      const double q = spec.Q(j, k);
      if (j == k) {
        F(j, k) = q - levy_exponent(spec.ordinate[static_cast<std::size_t>(j)], lambda) - spec.kill_rate;
      } else {
        const JumpLaw& xi = spec.switch_jump[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
        F(j, k) = q == 0.0 ? std::complex<double>(0.0) : q * xi.characteristic(lambda);
      }
    }
  }
  return F;
}

Eigen::MatrixXcd transition_transform(const MapSpec& spec, double lambda, double t) {
  const Eigen::MatrixXcd Ft = matrix_exponent(spec, lambda) * t;
  return Ft.exp();
}

double analytic_drift(const MapSpec& spec, const Eigen::VectorXd& pi) {
  double drift = 0.0;
  const std::size_t n = spec.n_states();
  for (std::size_t j = 0; j < n; ++j) {
    const auto& law = spec.ordinate[j];
    const auto pj = pi(static_cast<Eigen::Index>(j));
    drift += pj * (law.drift + law.jump_rate * law.jump.mean());
    for (std::size_t k = 0; k < n; ++k)
      if (k != j)
        drift += pj * spec.Q(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) *
                 spec.switch_jump[j][k].mean();
  }
  return drift;
}

MapSpec build_dual(const MapSpec& spec, const Eigen::VectorXd& pi) {
  const std::size_t n = spec.n_states();
  if (static_cast<std::size_t>(pi.size()) != n)
    throw SpecError("pi has " + std::to_string(pi.size()) + " entries for " + std::to_string(n) + " states");
  for (std::size_t j = 0; j < n; ++j)
    if (!(pi(static_cast<Eigen::Index>(j)) > 0.0))
      throw SpecError("pi must be strictly positive (state " + std::to_string(j) + ")");
  const Eigen::RowVectorXd residual = pi.transpose() * spec.Q;
  const double scale = std::max(1.0, spec.Q.cwiseAbs().maxCoeff());
  if (residual.cwiseAbs().maxCoeff() > 1e-10 * scale) throw SpecError("pi is not invariant for Q");

  MapSpec dual;
  dual.Q.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  dual.ordinate.resize(n);
  dual.switch_jump.assign(n, std::vector<JumpLaw>(n, JumpLaw::none()));
  dual.kill_rate = spec.kill_rate;
  for (std::size_t j = 0; j < n; ++j) {
    const auto J = static_cast<Eigen::Index>(j);
    for (std::size_t k = 0; k < n; ++k) {
      const auto K = static_cast<Eigen::Index>(k);
      dual.Q(J, K) = j == k ? spec.Q(J, J) : pi(K) * spec.Q(K, J) / pi(J);
      if (j != k) dual.switch_jump[j][k] = spec.switch_jump[k][j].negated();
    }
    const OrdinateLaw& law = spec.ordinate[j];
    dual.ordinate[j] = OrdinateLaw{-law.drift, law.sigma, law.jump_rate, law.jump.negated()};
  }
  return dual;
}

ReversibilityReport weak_reversibility_check(const MapSpec& spec, const MapSpec& dual,
                                             const Eigen::VectorXd& pi,
                                             const std::vector<double>& lambda_grid,
                                             const std::vector<double>& t_grid) {
  if (spec.n_states() != dual.n_states())
    throw SpecError("weak-reversibility partner has " + std::to_string(dual.n_states()) + " states, expected " +
                    std::to_string(spec.n_states()));
  const Eigen::VectorXd inv_pi = pi.cwiseInverse();
  ReversibilityReport report;
  for (double lambda : lambda_grid) {
    const Eigen::MatrixXcd F = matrix_exponent(spec, lambda);
    const Eigen::MatrixXcd Ftilde = matrix_exponent(dual, -lambda);
    for (double t : t_grid) {
      const Eigen::MatrixXcd P = (F * t).exp();
      const Eigen::MatrixXcd Ptilde = (Ftilde * t).exp();
      const Eigen::MatrixXcd target =
          inv_pi.cast<std::complex<double>>().asDiagonal() * P.transpose() * pi.cast<std::complex<double>>().asDiagonal();
      const double r = (Ptilde - target).cwiseAbs().maxCoeff();
      if (r > report.max_residual) report = {r, lambda, t};
    }
  }
  return report;
}

}  // namespace ssmp
