#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "ssmp/rng.hpp"
#include "ssmp/stats.hpp"

namespace ssmp {

/// Planar wedge {0 < arg x < theta0} and its first Dirichlet eigenpair on the arc.
struct ConeModel {
  double theta0 = 0.0;
  int d = 2;
  double lambda1 = 0.0;
  double p = 0.0;

  /// sin(pi phi / theta0) on (0, theta0), 0 outside.
  double m1(double phi) const;
  double m1_prime(double phi) const;
};

/// (pi / theta0)^2.
double eigen_first(double theta0);

/// Smallest lambda with a zero of -m'' = lambda m, m(0) = 0, m'(0) = 1 at theta0, by RK4 shooting and bisection.
double eigen_first_shooting(double theta0, std::size_t steps = 4000);

/// sqrt(lambda1 + (d/2 - 1)^2) - (d/2 - 1) for any dimension.
double cone_exponent(double lambda1, double d);

/// Throws SpecError unless 0 < theta0 < 2 pi and d == 2.
ConeModel make_cone(double theta0, int d = 2);

/// atan2 mapped to [0, 2 pi).
double polar_angle(double x, double y);

struct HarmonicValue {
  double value = 0.0;
  bool inside = false;
};

/// |x|^p m1(arg x); 0 with inside = false off the open wedge.
HarmonicValue harmonic_M(const ConeModel& model, double x, double y);

/// |5-point Laplacian of M| / M at an interior point.
double harmonicity_residual(const ConeModel& model, double x, double y, double h = 1e-3);

struct ConeWalkOptions {
  double dt = 1e-3;
  double stop_radius = 1.0;
  double t_max = 1e6;
  /// Steps shorter than min_dt_rel * |B|^2 abort the walk.
  double min_dt_rel = 1e-24;
  std::size_t max_resample = 1000;
  bool record = false;
};

struct ConeWalk {
  bool exited = false;
  double time = 0.0;
  /// int dt / |B|^2 up to the exit.
  double map_time = 0.0;
  double exit_angle = 0.0;
  double exit_radius = 0.0;
  std::size_t steps = 0;
  std::size_t resamples = 0;
  std::vector<double> t, x, y;  // filled when record is set
};

/**
 * Euler-Maruyama for Brownian motion conditioned to stay in the wedge: drift
 * grad log M = p x / |x|^2 + (m1'/m1)(phi) e_phi / |x|. Steps shrink to
 * d^2 / 24 at distance d from the edges and proposals leaving the wedge are
 * redrawn. Exit of the stop disc is checked with the radial bridge.
 */
ConeWalk simulate_conditioned_bm(const ConeModel& model, double x0, double y0, RngStream rng,
                                 const ConeWalkOptions& opts = {});

struct MartingaleCheck {
  double mean = 0.0;
  double se = 0.0;
  double target = 0.0;
};

/// E[M(B_{t ^ tau})] for plain Brownian motion killed at the edges, sampled exactly.
/// Only the quadrant and the half-plane are supported.
MartingaleCheck martingale_check(const ConeModel& model, double x0, double y0, double t, std::size_t n,
                                 RngStream rng, unsigned jobs = 0);

struct MapDrift {
  /// Mean of log |B| increments per unit of int dt / |B|^2.
  double slope = 0.0;
  double se = 0.0;
  /// psi'(p) with psi(theta) = theta^2 + (d - 2) theta, whose Brownian motion runs at twice the speed.
  double predicted = 0.0;
};

MapDrift map_time_drift(const ConeModel& model, double r0, std::size_t n, RngStream rng,
                        const ConeWalkOptions& opts = {}, unsigned jobs = 0);

struct ApexExitLaw {
  std::vector<double> radii;
  std::vector<EmpiricalDist> angles;
  /// KS distance of each radius against the smallest one.
  std::vector<double> ks_to_smallest;
  /// Share of bootstrap resamples in which ks_to_smallest decreases along the radii.
  double confidence = 0.0;
  std::size_t bootstrap = 0;
};

/// Exit angles of the unit disc from the bisector at each start radius; radii must decrease.
ApexExitLaw apex_exit_law(const ConeModel& model, const std::vector<double>& radii, std::size_t n, RngStream rng,
                          const ConeWalkOptions& opts = {}, std::size_t bootstrap = 200, unsigned jobs = 0);

std::complex<double> log_gamma(std::complex<double> z);
/// 1 / Gamma(z), exactly 0 at the poles.
std::complex<double> rgamma(std::complex<double> z);

/// Radial exponents of the isotropic alpha-stable process in dimension d.
struct StableExponents {
  double alpha = 1.0;
  double d = 2.0;

  std::complex<double> psi(double theta) const;
  std::complex<double> kappa(std::complex<double> lambda) const;
  std::complex<double> kappa_hat(std::complex<double> lambda) const;
  /// |psi(theta) - kappa(-i theta) kappa_hat(i theta)|.
  double factorization_residual(double theta) const;
};

/// Throws SpecError unless 0 < alpha < 2 and d >= 2.
StableExponents stable_exponents(double alpha, double d);

}  // namespace ssmp
