#include "ssmp/map_path.hpp"

#include <algorithm>

#include "ssmp/stats.hpp"

namespace ssmp {

MapWalker::MapWalker(const MapSpec& spec, double x0, std::uint32_t theta0, double mesh, RngStream rng,
                     bool grid_on_flat)
    : spec_(&spec),
      rng_(rng),
      aux_(rng.fork(1)),
      mesh_(mesh),
      grid_on_flat_(grid_on_flat),
      x_(x0),
      base_x_(x0),
      state_(theta0) {
  const std::size_t n = spec.n_states();
  switch_cdf_.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    const double total = -spec.Q(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k != j && total > 0.0) acc += spec.Q(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) / total;
      switch_cdf_[j][k] = acc;
    }
  }
  kill_time_ = rng_.exponential(spec.kill_rate);
  schedule_after_state_change();
}

void MapWalker::schedule_after_state_change() {
  const auto j = static_cast<Eigen::Index>(state_);
  next_switch_ = t_ + rng_.exponential(-spec_->Q(j, j));
  next_jump_ = t_ + rng_.exponential(spec_->ordinate[state_].jump_rate);
}

WalkStep MapWalker::advance(double horizon) {
  const OrdinateLaw& law = spec_->ordinate[state_];
  const double grid_next = static_cast<double>(grid_index_ + 1) * mesh_;
  const double event_next = std::min({next_switch_, next_jump_, kill_time_});
  const bool use_grid = grid_on_flat_ || law.sigma > 0.0;
  double t1 = std::min(event_next, horizon);
  if (use_grid) t1 = std::min(t1, grid_next);

  WalkStep step;
  const double h = t1 - t_;
  if (h > 0.0 && law.sigma > 0.0) brownian_ += std::sqrt(h) * rng_.normal();
  const double x1 = base_x_ + law.drift * (t1 - base_t_) + law.sigma * brownian_;
  step.seg = Segment{t_, t1, x_, x1, law.sigma, state_};
  t_ = t1;
  x_ = x1;

  if (t1 >= grid_next) {
    step.on_grid = t1 == grid_next;
    grid_index_ = static_cast<std::uint64_t>(std::floor(t1 / mesh_));
    if (static_cast<double>(grid_index_ + 1) * mesh_ <= t1) ++grid_index_;
  }

  if (t1 == event_next && t1 <= horizon) {
    MapEvent ev;
    ev.time = t1;
    ev.pre_xi = x_;
    ev.pre_state = state_;
    if (t1 == kill_time_) {
      ev.kind = EventKind::kill;
      alive_ = false;
    } else if (t1 == next_switch_) {
      ev.kind = EventKind::chain_switch;
      const double u = rng_.uniform();
      const auto& cdf = switch_cdf_[state_];
      std::uint32_t next = state_;
      for (std::size_t k = 0; k < cdf.size(); ++k) {
        if (k != state_ && u < cdf[k]) {
          next = static_cast<std::uint32_t>(k);
          break;
        }
      }
      if (next == state_) {
        // u fell on the rounding slack of the last cumulative entry.
        for (std::size_t k = cdf.size(); k-- > 0;)
          if (k != state_) {
            next = static_cast<std::uint32_t>(k);
            break;
          }
      }
      const JumpLaw& extra = spec_->switch_jump[state_][next];
      if (!extra.is_none()) x_ += extra.sample(rng_);
      state_ = next;
      schedule_after_state_change();
    } else {
      ev.kind = EventKind::ordinate_jump;
      x_ += law.jump.sample(rng_);
      next_jump_ = t1 + rng_.exponential(law.jump_rate);
    }
    ev.post_xi = x_;
    ev.post_state = state_;
    base_t_ = t1;
    base_x_ = x_;
    brownian_ = 0.0;
    step.has_event = true;
    step.event = ev;
  }
  return step;
}

MapPath simulate_map(const MapSpec& spec, double x0, std::uint32_t theta0, double horizon, double mesh,
                     RngStream rng, const StopRule& stop) {
  MapPath path;
  path.mesh = mesh;
  path.t.reserve(static_cast<std::size_t>(std::min(horizon / mesh, 1e7)) + 16);
  path.xi.reserve(path.t.capacity());
  path.theta.reserve(path.t.capacity());
  path.push(0.0, x0, theta0);

  const auto hit = [&](double x) {
    return (stop.above && x > *stop.above) || (stop.below && x < *stop.below);
  };
  if (hit(x0)) return path;

  MapWalker walker(spec, x0, theta0, mesh, rng);
  while (walker.alive() && walker.time() < horizon) {
    const WalkStep step = walker.advance(horizon);
    path.push(step.seg.t1, step.seg.x1, step.seg.state);
    if (step.has_event) {
      const MapEvent& ev = step.event;
      path.events.push_back(ev);
      if (ev.kind == EventKind::kill) {
        path.lifetime = ev.time;
        break;
      }
      if (ev.post_xi != ev.pre_xi || ev.post_state != ev.pre_state) path.push(ev.time, ev.post_xi, ev.post_state);
    }
    if (hit(path.xi.back()) || hit(step.seg.x1)) break;
  }
  return path;
}

namespace {

// Last knot with time <= t (right-continuous reading).
std::size_t knot_at_or_before(const MapPath& path, double t) {
  const auto it = std::upper_bound(path.t.begin(), path.t.end(), t);
  if (it == path.t.begin()) return 0;
  return static_cast<std::size_t>(it - path.t.begin()) - 1;
}

}  // namespace

double value_at(const MapPath& path, double t) {
  const std::size_t i = knot_at_or_before(path, t);
  if (i + 1 >= path.size() || path.t[i] == t) return path.xi[i];
  const double w = (t - path.t[i]) / (path.t[i + 1] - path.t[i]);
  return path.xi[i] + w * (path.xi[i + 1] - path.xi[i]);
}

std::uint32_t state_at(const MapPath& path, double t) { return path.theta[knot_at_or_before(path, t)]; }

std::string path_to_csv(const MapPath& path) {
  std::string out = "t,xi,theta\n";
  out.reserve(path.size() * 32);
  for (std::size_t i = 0; i < path.size(); ++i)
    out += format_double(path.t[i]) + "," + format_double(path.xi[i]) + "," + std::to_string(path.theta[i]) + "\n";
  return out;
}

}  // namespace ssmp
