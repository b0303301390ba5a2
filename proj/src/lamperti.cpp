#include "ssmp/lamperti.hpp"

#include <algorithm>
#include <cmath>

#include "ssmp/errors.hpp"
#include "ssmp/simd/kernels.hpp"
#include "ssmp/stats.hpp"

namespace ssmp {

namespace {

// Forward clock: trapezoid rule for exp(rate v) against t.
std::vector<double> clock_of(const std::vector<double>& t, const std::vector<double>& v, double rate) {
  std::vector<double> clock(t.size(), 0.0);
  if (t.size() < 2) return clock;
  std::vector<double> inc(t.size() - 1);
  simd::exp_trapezoid(t, v, rate, inc);
  simd::prefix_sum(inc, 0.0, std::span<double>(clock).subspan(1));
  return clock;
}

// Backward clock: the exact algebraic inverse of the forward step, so a round
// trip returns the original knot times up to rounding.
std::vector<double> inverse_clock_of(const std::vector<double>& t, const std::vector<double>& v, double rate) {
  std::vector<double> clock(t.size(), 0.0);
  if (t.size() < 2) return clock;
  std::vector<double> inc(t.size() - 1);
  simd::exp_harmonic_step(t, v, rate, inc);
  simd::prefix_sum(inc, 0.0, std::span<double>(clock).subspan(1));
  return clock;
}

}  // namespace

std::vector<double> additive_clock(const MapPath& path, double alpha) {
  if (!(alpha > 0.0)) throw SpecError("alpha must be positive");
  return clock_of(path.t, path.xi, alpha);
}

SsmpPath lamperti_kiu(const MapPath& path, double alpha, const LampertiOptions& opts) {
  const std::vector<double> A = additive_clock(path, alpha);
  SsmpPath ss;
  ss.alpha = alpha;
  ss.mesh = opts.mesh == 0.0 ? path.mesh : opts.mesh;
  if (path.killed()) ss.lifetime = A.empty() ? 0.0 : A.back();
  const std::size_t n = path.size();
  if (n == 0) return ss;

  const double end = A.back();
  const bool grid = ss.mesh > 0.0;
  if (grid && end / ss.mesh > static_cast<double>(opts.max_grid_points))
    throw SimulationError("uniform X grid would need more than " + std::to_string(opts.max_grid_points) +
                          " points; use a coarser mesh");
  ss.t.reserve(n + (grid ? static_cast<std::size_t>(end / ss.mesh) + 1 : 0));
  ss.r.reserve(ss.t.capacity());
  ss.theta.reserve(ss.t.capacity());

  std::uint64_t k = 1;  // next uniform grid index
  for (std::size_t i = 0; i < n; ++i) {
    if (grid && i > 0 && A[i] > A[i - 1]) {
      // Grid points strictly inside (A[i-1], A[i]). Between knots the clock
      // integrand f = exp(alpha xi) is taken linear in MAP time, which is the
      // model under which the trapezoid clock is exact; phi(g) solves
      // f0 d + (f1 - f0) d^2 / (2h) = g - A[i-1].
      const double h = path.t[i] - path.t[i - 1];
      const double f0 = std::exp(alpha * path.xi[i - 1]);
      const double f1 = std::exp(alpha * path.xi[i]);
      for (double g = static_cast<double>(k) * ss.mesh; g < A[i]; g = static_cast<double>(++k) * ss.mesh) {
        if (g <= A[i - 1]) continue;
        const double c = g - A[i - 1];
        const double d = std::min(h, 2.0 * c / (f0 + std::sqrt(std::max(0.0, f0 * f0 + 2.0 * (f1 - f0) * c / h))));
        const double fg = f0 + d / h * (f1 - f0);
        ss.push(g, std::exp(std::log(fg) / alpha), path.theta[i - 1]);
      }
      if (static_cast<double>(k) * ss.mesh == A[i]) ++k;
    }
    ss.push(A[i], std::exp(path.xi[i]), path.theta[i]);
  }
  return ss;
}

MapPath inverse_lamperti(const SsmpPath& ss, double alpha) {
  if (!(alpha > 0.0)) throw SpecError("alpha must be positive");
  MapPath out;
  out.mesh = ss.mesh;
  std::vector<double> logr(ss.size());
  for (std::size_t i = 0; i < ss.size(); ++i) {
    if (!(ss.r[i] > 0.0) && ss.t[i] < ss.lifetime)
      throw SpecError("zero radius encountered at t = " + format_double(ss.t[i]) + " before the lifetime");
    logr[i] = std::log(ss.r[i]);
  }
  out.t = inverse_clock_of(ss.t, logr, alpha);
  out.xi = std::move(logr);
  out.theta = ss.theta;
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (ss.t[i] != ss.t[i - 1]) continue;
    MapEvent ev;
    ev.time = out.t[i];
    ev.kind = out.theta[i] == out.theta[i - 1] ? EventKind::ordinate_jump : EventKind::chain_switch;
    ev.pre_xi = out.xi[i - 1];
    ev.post_xi = out.xi[i];
    ev.pre_state = out.theta[i - 1];
    ev.post_state = out.theta[i];
    out.events.push_back(ev);
  }
  if (std::isfinite(ss.lifetime)) {
    out.lifetime = out.t.empty() ? 0.0 : out.t.back();
    MapEvent kill;
    kill.time = out.lifetime;
    kill.kind = EventKind::kill;
    if (!out.xi.empty()) kill.pre_xi = kill.post_xi = out.xi.back();
    if (!out.theta.empty()) kill.pre_state = kill.post_state = out.theta.back();
    out.events.push_back(kill);
  }
  return out;
}

SsmpPath scale_path(const SsmpPath& ss, double c) {
  if (!(c > 0.0)) throw SpecError("scale factor must be positive");
  const double ct = std::pow(c, ss.alpha);
  SsmpPath out = ss;
  simd::affine(ss.t, 0.0, ct, out.t);
  simd::affine(ss.r, 0.0, c, out.r);
  out.lifetime = ss.lifetime * ct;
  out.mesh = ss.mesh * ct;
  return out;
}

SsmpPath reverse_path(const SsmpPath& ss) {
  const double end = std::isfinite(ss.lifetime) ? ss.lifetime : (ss.t.empty() ? 0.0 : ss.t.back());
  SsmpPath out = ss;
  const std::size_t n = ss.size();
  for (std::size_t i = 0; i < n; ++i) {
    out.t[i] = end - ss.t[n - 1 - i];
    out.r[i] = ss.r[n - 1 - i];
    out.theta[i] = ss.theta[n - 1 - i];
  }
  out.lifetime = end;
  return out;
}

std::optional<ExitQuadruple> exit_quadruple(const SsmpPath& ss, double radius) {
  const std::size_t i = simd::first_above(ss.r, radius);
  if (i >= ss.size()) return std::nullopt;
  ExitQuadruple q;
  const double log_level = std::log(radius);
  if (i > 0 && ss.t[i] == ss.t[i - 1]) {
    q.time = ss.t[i];
    q.by_jump = true;
    q.state_before = ss.theta[i - 1];
    q.log_r_before = std::log(ss.r[i - 1]);
    q.state_after = ss.theta[i];
    q.log_r_after = std::log(ss.r[i]);
    return q;
  }
  // Continuous exit between knots i-1 and i (or at the start).
  q.time = ss.t[i];
  if (i > 0 && ss.r[i] != ss.r[i - 1]) {
    const double w = (radius - ss.r[i - 1]) / (ss.r[i] - ss.r[i - 1]);
    q.time = ss.t[i - 1] + w * (ss.t[i] - ss.t[i - 1]);
  }
  const std::uint32_t state = i > 0 ? ss.theta[i - 1] : ss.theta[i];
  q.state_before = q.state_after = state;
  q.log_r_before = q.log_r_after = i == 0 ? std::log(ss.r[0]) : log_level;
  return q;
}

double round_trip_error(const MapPath& original, const MapPath& recovered) {
  std::vector<std::pair<double, double>> jumps_rec;
  for (std::size_t i = 1; i < recovered.size(); ++i)
    if (recovered.t[i] == recovered.t[i - 1]) jumps_rec.emplace_back(recovered.xi[i - 1], recovered.xi[i]);
  std::size_t next_jump = 0;
  double err = 0.0;
  for (std::size_t i = 0; i < original.size(); ++i) {
    const bool jump_pre = i + 1 < original.size() && original.t[i + 1] == original.t[i];
    const bool jump_post = i > 0 && original.t[i - 1] == original.t[i];
    if (jump_pre) {
      if (next_jump >= jumps_rec.size()) return std::numeric_limits<double>::infinity();
      err = std::max(err, std::fabs(original.xi[i] - jumps_rec[next_jump].first));
    } else if (jump_post) {
      err = std::max(err, std::fabs(original.xi[i] - jumps_rec[next_jump].second));
      ++next_jump;
    } else {
      err = std::max(err, std::fabs(original.xi[i] - value_at(recovered, original.t[i])));
    }
  }
  if (next_jump != jumps_rec.size()) return std::numeric_limits<double>::infinity();
  return err;
}

std::string ssmp_to_csv(const SsmpPath& ss) {
  std::string out = "t,r,theta\n";
  out.reserve(ss.size() * 32);
  for (std::size_t i = 0; i < ss.size(); ++i)
    out += format_double(ss.t[i]) + "," + format_double(ss.r[i]) + "," + std::to_string(ss.theta[i]) + "\n";
  return out;
}

}  // namespace ssmp
