#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ssmp/map_spec.hpp"
#include "ssmp/rng.hpp"

namespace ssmp {

enum class EventKind : std::uint8_t { chain_switch, ordinate_jump, kill };

struct MapEvent {
  double time = 0.0;
  EventKind kind = EventKind::ordinate_jump;
  double pre_xi = 0.0;
  double post_xi = 0.0;
  std::uint32_t pre_state = 0;
  std::uint32_t post_state = 0;
};

/**
 * Sampled MAP path. Knots are the uniform grid k * mesh plus every event
 * time; an event that moves the ordinate or the state appears as two knots
 * with the same time (left limit first). Nothing is recorded past the
 * lifetime.
 */
struct MapPath {
  double mesh = 1e-3;
  std::vector<double> t;
  std::vector<double> xi;
  std::vector<std::uint32_t> theta;
  std::vector<MapEvent> events;
  double lifetime = std::numeric_limits<double>::infinity();

  std::size_t size() const noexcept { return t.size(); }
  bool killed() const noexcept { return std::isfinite(lifetime); }
  void push(double time, double x, std::uint32_t state) {
    t.push_back(time);
    xi.push_back(x);
    theta.push_back(state);
  }
};

/// One continuous piece of the ordinate: drift plus Brownian motion on [t0, t1].
struct Segment {
  double t0 = 0.0;
  double t1 = 0.0;
  double x0 = 0.0;
  double x1 = 0.0;
  double sigma = 0.0;
  std::uint32_t state = 0;

  double length() const noexcept { return t1 - t0; }
};

struct WalkStep {
  Segment seg;
  bool on_grid = false;
  bool has_event = false;
  MapEvent event;
};

/// Exact maximum of the Brownian bridge over a segment, given a uniform u in (0,1).
inline double bridge_max(const Segment& s, double u) noexcept {
  const double d = s.x1 - s.x0;
  const double h = s.length();
  if (s.sigma <= 0.0 || h <= 0.0) return std::max(s.x0, s.x1);
  return 0.5 * (s.x0 + s.x1 + std::sqrt(d * d - 2.0 * s.sigma * s.sigma * h * std::log(u)));
}

/// Exact minimum of the Brownian bridge over a segment.
inline double bridge_min(const Segment& s, double u) noexcept {
  const Segment flipped{s.t0, s.t1, -s.x0, -s.x1, s.sigma, s.state};
  return -bridge_max(flipped, u);
}

/// Probability that the bridge exceeds `level` inside the segment.
inline double bridge_cross_probability(const Segment& s, double level) noexcept {
  if (s.x0 > level || s.x1 > level) return 1.0;
  const double h = s.length();
  if (s.sigma <= 0.0 || h <= 0.0) return 0.0;
  const double e = 2.0 * (level - s.x0) * (level - s.x1) / (s.sigma * s.sigma * h);
  return e > 745.0 ? 0.0 : std::exp(-e);
}

/**
 * Advances a MAP one knot at a time. Between events the ordinate receives
 * exact Gaussian increments; switch, jump and killing times are exponential
 * clocks sampled exactly. The same stream always yields the same events and
 * increments, and x0 only shifts the ordinate.
 *
 * With `grid_on_flat` false, segments in states with sigma == 0 run straight to
 * the next event instead of stopping at grid points. No random numbers are
 * drawn on such segments, so the sequence of events is identical either way.
 *
 * The referenced spec must outlive the walker and must have been validated.
 */
class MapWalker {
 public:
  MapWalker(const MapSpec& spec, double x0, std::uint32_t theta0, double mesh, RngStream rng,
            bool grid_on_flat = true);

  double time() const noexcept { return t_; }
  double xi() const noexcept { return x_; }
  std::uint32_t state() const noexcept { return state_; }
  bool alive() const noexcept { return alive_; }
  double mesh() const noexcept { return mesh_; }
  void set_grid_on_flat(bool on) noexcept { grid_on_flat_ = on; }

  /// Side stream for bridge sampling and other consumer randomness that must
  /// not perturb the path itself.
  RngStream& aux() noexcept { return aux_; }

  /// Moves to the next grid point, event or `horizon`, whichever comes first.
  /// Requires alive() and time() < horizon.
  WalkStep advance(double horizon);

 private:
  void schedule_after_state_change();

  const MapSpec* spec_;
  RngStream rng_;
  RngStream aux_;
  double mesh_;
  bool grid_on_flat_;
  double t_ = 0.0;
  double x_;
  // Ordinate since the last event: base_x_ + drift (t - base_t_) + sigma * brownian_.
  double base_x_;
  double base_t_ = 0.0;
  double brownian_ = 0.0;
  std::uint32_t state_;
  bool alive_ = true;
  std::uint64_t grid_index_ = 0;
  double next_switch_ = std::numeric_limits<double>::infinity();
  double next_jump_ = std::numeric_limits<double>::infinity();
  double kill_time_ = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> switch_cdf_;
};

struct StopRule {
  /// Stop after the first knot strictly above this value.
  std::optional<double> above;
  /// Stop after the first knot strictly below this value.
  std::optional<double> below;
};

/// Records a path on [0, horizon] (or until the stop rule fires or the path is killed).
MapPath simulate_map(const MapSpec& spec, double x0, std::uint32_t theta0, double horizon, double mesh,
                     RngStream rng, const StopRule& stop = {});

/// Ordinate value at time t by linear interpolation between knots (right-continuous at jumps).
double value_at(const MapPath& path, double t);

/// State at time t (right-continuous).
std::uint32_t state_at(const MapPath& path, double t);

/// CSV with columns t, xi, theta.
std::string path_to_csv(const MapPath& path);

}  // namespace ssmp
