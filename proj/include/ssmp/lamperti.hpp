#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ssmp/map_path.hpp"

namespace ssmp {

/**
 * Path of a self-similar Markov process X = r * theta. A jump shows up as two
 * knots sharing a time (left limit first), as in MapPath.
 */
struct SsmpPath {
  double alpha = 1.0;
  double mesh = 1e-3;
  std::vector<double> t;
  std::vector<double> r;
  std::vector<std::uint32_t> theta;
  /// Finite when the path dies (killed MAP, or time-reversed construction).
  double lifetime = std::numeric_limits<double>::infinity();
  /// True when the path was built to start at the origin.
  bool from_origin = false;

  std::size_t size() const noexcept { return t.size(); }
  void push(double time, double radius, std::uint32_t state) {
    t.push_back(time);
    r.push_back(radius);
    theta.push_back(state);
  }
};

/// A(t_i) = int_0^{t_i} exp(alpha xi_u) du by the trapezoid rule on the path knots.
std::vector<double> additive_clock(const MapPath& path, double alpha);

struct LampertiOptions {
  /// Mesh of the uniform X-time grid; 0 means the MAP mesh. Negative disables
  /// the uniform grid so only images of MAP knots are emitted.
  double mesh = 0.0;
  /// Refuse to emit more uniform grid points than this.
  std::size_t max_grid_points = 50'000'000;
};

/**
 * X_t = exp(xi_{phi(t)}) Theta_{phi(t)}, phi the inverse of the additive clock.
 * The output knots are the images A(t_i) of every MAP knot merged with a
 * uniform grid in X-time. Jumps stay jumps.
 */
SsmpPath lamperti_kiu(const MapPath& path, double alpha, const LampertiOptions& opts = {});

/// xi = log r on the clock s(t) = int_0^t r^{-alpha}. Throws SpecError on a
/// nonpositive radius before the lifetime.
MapPath inverse_lamperti(const SsmpPath& ss, double alpha);

/// Law of (c X_{c^{-alpha} t}): radii times c, times and lifetime times c^alpha.
SsmpPath scale_path(const SsmpPath& ss, double c);

/// Time reversal from the lifetime: t -> lifetime - t with knot order reversed,
/// so the value at a reversed jump time is the original left limit.
SsmpPath reverse_path(const SsmpPath& ss);

/**
 * Values at the first exit of the ball of radius `radius`: state and log radius
 * just before and at the exit time. A continuous exit reports the boundary
 * value log(radius) on both sides.
 */
struct ExitQuadruple {
  double time = 0.0;
  std::uint32_t state_before = 0;
  double log_r_before = 0.0;
  std::uint32_t state_after = 0;
  double log_r_after = 0.0;
  bool by_jump = false;
};

std::optional<ExitQuadruple> exit_quadruple(const SsmpPath& ss, double radius);

/// Largest ordinate discrepancy between a MAP path and a reconstruction of it.
/// Continuous knots are compared by interpolation, jump pairs in order.
double round_trip_error(const MapPath& original, const MapPath& recovered);

/// CSV with columns t, r, theta.
std::string ssmp_to_csv(const SsmpPath& ss);

}  // namespace ssmp
