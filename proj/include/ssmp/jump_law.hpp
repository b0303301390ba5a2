#pragma once

#include <complex>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ssmp/rng.hpp"

namespace ssmp {

struct NoJump {
  bool operator==(const NoJump&) const = default;
};

struct PointMass {
  double at = 0.0;
  bool operator==(const PointMass&) const = default;
};

/// sign * Exp(rate), sign in {+1, -1}.
struct Exponential {
  double rate = 1.0;
  int sign = 1;
  bool operator==(const Exponential&) const = default;
};

/// Up with probability p_up as Exp(rate_up), otherwise down as -Exp(rate_down).
struct TwoSidedExponential {
  double rate_up = 1.0;
  double rate_down = 1.0;
  double p_up = 0.5;
  bool operator==(const TwoSidedExponential&) const = default;
};

/// Resampled with replacement; tail and characteristic function from the ECDF.
struct Empirical {
  std::vector<double> values;  // kept sorted
  bool operator==(const Empirical&) const = default;
};

/**
 * Law of a single jump of the ordinate (the Levy-measure shape of a state, or
 * the extra jump attached to a chain switch).
 *
 * `tail(y)` is P(J > y). It is closed form for every parametric kind and the
 * ECDF tail for empirical data, and it is the function the simulator's
 * sampler is checked against.
 */
class JumpLaw {
 public:
  using Variant = std::variant<NoJump, PointMass, Exponential, TwoSidedExponential, Empirical>;

  JumpLaw() = default;
  explicit JumpLaw(Variant law);

  static JumpLaw none() { return JumpLaw(NoJump{}); }
  static JumpLaw point(double at) { return JumpLaw(PointMass{at}); }
  static JumpLaw exponential(double rate, int sign = 1) { return JumpLaw(Exponential{rate, sign}); }
  static JumpLaw two_sided(double rate_up, double rate_down, double p_up) {
    return JumpLaw(TwoSidedExponential{rate_up, rate_down, p_up});
  }
  static JumpLaw empirical(std::vector<double> values);

  const Variant& law() const noexcept { return law_; }
  bool is_none() const noexcept { return std::holds_alternative<NoJump>(law_); }

  /// Throws SpecError naming `where` when parameters are out of range.
  void validate(std::string_view where) const;

  double sample(RngStream& rng) const;
  std::complex<double> characteristic(double lambda) const;
  double tail(double y) const;
  double mean() const;

  /// Law of -J.
  JumpLaw negated() const;

  /// Text form used by the spec file format, e.g. "exponential 2 -1".
  std::string to_text() const;
  /// Inverse of to_text(); throws std::invalid_argument on malformed input.
  static JumpLaw from_text(std::string_view text);

  bool operator==(const JumpLaw&) const = default;

 private:
  Variant law_{NoJump{}};
};

}  // namespace ssmp
