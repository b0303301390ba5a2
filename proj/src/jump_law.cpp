#include "ssmp/jump_law.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ssmp/errors.hpp"

namespace ssmp {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::vector<std::string> split_ws(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream is{std::string(text)};
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

double parse_number(const std::string& tok) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("not a number: '" + tok + "'");
  }
  if (used != tok.size()) throw std::invalid_argument("not a number: '" + tok + "'");
  return v;
}

}  // namespace

JumpLaw::JumpLaw(Variant law) : law_(std::move(law)) {
  if (auto* e = std::get_if<Empirical>(&law_)) std::sort(e->values.begin(), e->values.end());
}

JumpLaw JumpLaw::empirical(std::vector<double> values) { return JumpLaw(Empirical{std::move(values)}); }

void JumpLaw::validate(std::string_view where) const {
  const auto fail = [&](const std::string& why) {
    throw SpecError("malformed jump law at " + std::string(where) + ": " + why);
  };
  std::visit(overloaded{
                 [](const NoJump&) {},
                 [&](const PointMass& p) {
                   if (!std::isfinite(p.at)) fail("non-finite point mass");
                 },
                 [&](const Exponential& e) {
                   if (!(e.rate > 0.0) || !std::isfinite(e.rate)) fail("exponential rate must be > 0");
                   if (e.sign != 1 && e.sign != -1) fail("exponential sign must be +1 or -1");
                 },
                 [&](const TwoSidedExponential& e) {
                   if (!(e.rate_up > 0.0) || !(e.rate_down > 0.0)) fail("two-sided rates must be > 0");
                   if (!(e.p_up >= 0.0 && e.p_up <= 1.0)) fail("p_up must lie in [0, 1]");
                 },
                 [&](const Empirical& e) {
                   if (e.values.empty()) fail("empirical law needs at least one value");
                   for (double v : e.values)
                     if (!std::isfinite(v)) fail("non-finite empirical value");
                 },
             },
             law_);
}

double JumpLaw::sample(RngStream& rng) const {
  return std::visit(overloaded{
                        [](const NoJump&) { return 0.0; },
                        [](const PointMass& p) { return p.at; },
                        [&](const Exponential& e) { return e.sign * rng.exponential(e.rate); },
                        [&](const TwoSidedExponential& e) {
                          const bool up = rng.uniform() < e.p_up;
                          return up ? rng.exponential(e.rate_up) : -rng.exponential(e.rate_down);
                        },
                        [&](const Empirical& e) { return e.values[rng.below(e.values.size())]; },
                    },
                    law_);
}

std::complex<double> JumpLaw::characteristic(double lambda) const {
  using C = std::complex<double>;
  const C i(0.0, 1.0);
  return std::visit(overloaded{
                        [](const NoJump&) { return C(1.0); },
                        [&](const PointMass& p) { return std::exp(i * lambda * p.at); },
                        [&](const Exponential& e) {
                          return C(e.rate) / (C(e.rate) - i * (lambda * e.sign));
                        },
                        [&](const TwoSidedExponential& e) {
                          return e.p_up * C(e.rate_up) / (C(e.rate_up) - i * lambda) +
                                 (1.0 - e.p_up) * C(e.rate_down) / (C(e.rate_down) + i * lambda);
                        },
                        [&](const Empirical& e) {
                          if (e.values.empty())
                            throw SpecError("empirical jump law without data has no characteristic function");
                          C acc(0.0);
                          for (double v : e.values) acc += std::exp(i * lambda * v);
                          return acc / static_cast<double>(e.values.size());
                        },
                    },
                    law_);
}

double JumpLaw::tail(double y) const {
  return std::visit(overloaded{
                        [&](const NoJump&) { return y < 0.0 ? 1.0 : 0.0; },
                        [&](const PointMass& p) { return p.at > y ? 1.0 : 0.0; },
                        [&](const Exponential& e) {
                          if (e.sign > 0) return y < 0.0 ? 1.0 : std::exp(-e.rate * y);
                          return y < 0.0 ? -std::expm1(e.rate * y) : 0.0;
                        },
                        [&](const TwoSidedExponential& e) {
                          if (y >= 0.0) return e.p_up * std::exp(-e.rate_up * y);
                          return e.p_up + (1.0 - e.p_up) * (-std::expm1(e.rate_down * y));
                        },
                        [&](const Empirical& e) {
                          const auto it = std::upper_bound(e.values.begin(), e.values.end(), y);
                          return static_cast<double>(e.values.end() - it) /
                                 static_cast<double>(e.values.size());
                        },
                    },
                    law_);
}

double JumpLaw::mean() const {
  return std::visit(overloaded{
                        [](const NoJump&) { return 0.0; },
                        [](const PointMass& p) { return p.at; },
                        [](const Exponential& e) { return e.sign / e.rate; },
                        [](const TwoSidedExponential& e) {
                          return e.p_up / e.rate_up - (1.0 - e.p_up) / e.rate_down;
                        },
                        [](const Empirical& e) {
                          double s = 0.0;
                          for (double v : e.values) s += v;
                          return e.values.empty() ? 0.0 : s / static_cast<double>(e.values.size());
                        },
                    },
                    law_);
}

JumpLaw JumpLaw::negated() const {
  return std::visit(overloaded{
                        [](const NoJump&) { return JumpLaw::none(); },
                        [](const PointMass& p) { return JumpLaw::point(-p.at); },
                        [](const Exponential& e) { return JumpLaw::exponential(e.rate, -e.sign); },
                        [](const TwoSidedExponential& e) {
                          return JumpLaw::two_sided(e.rate_down, e.rate_up, 1.0 - e.p_up);
                        },
                        [](const Empirical& e) {
                          std::vector<double> v(e.values.size());
                          std::transform(e.values.begin(), e.values.end(), v.begin(),
                                         [](double x) { return -x; });
                          return JumpLaw::empirical(std::move(v));
                        },
                    },
                    law_);
}

std::string JumpLaw::to_text() const {
  return std::visit(overloaded{
                        [](const NoJump&) { return std::string("none"); },
                        [](const PointMass& p) { return "point " + fmt(p.at); },
                        [](const Exponential& e) {
                          return "exponential " + fmt(e.rate) + (e.sign > 0 ? " +1" : " -1");
                        },
                        [](const TwoSidedExponential& e) {
                          return "two_sided " + fmt(e.rate_up) + " " + fmt(e.rate_down) + " " + fmt(e.p_up);
                        },
                        [](const Empirical& e) {
                          std::string s = "empirical";
                          for (double v : e.values) s += " " + fmt(v);
                          return s;
                        },
                    },
                    law_);
}

JumpLaw JumpLaw::from_text(std::string_view text) {
  const auto tok = split_ws(text);
  if (tok.empty()) throw std::invalid_argument("empty jump law");
  const std::string& kind = tok[0];
  const auto need = [&](std::size_t n) {
    if (tok.size() != n + 1)
      throw std::invalid_argument("jump law '" + kind + "' expects " + std::to_string(n) + " parameters");
  };
  if (kind == "none") {
    need(0);
    return none();
  }
  if (kind == "point") {
    need(1);
    return point(parse_number(tok[1]));
  }
  if (kind == "exponential") {
    if (tok.size() == 2) return exponential(parse_number(tok[1]), 1);
    need(2);
    const double s = parse_number(tok[2]);
    if (s != 1.0 && s != -1.0) throw std::invalid_argument("exponential sign must be +1 or -1");
    return exponential(parse_number(tok[1]), s > 0 ? 1 : -1);
  }
  if (kind == "two_sided") {
    need(3);
    return two_sided(parse_number(tok[1]), parse_number(tok[2]), parse_number(tok[3]));
  }
  if (kind == "empirical") {
    std::vector<double> v;
    for (std::size_t i = 1; i < tok.size(); ++i) v.push_back(parse_number(tok[i]));
    return empirical(std::move(v));
  }
  throw std::invalid_argument("unknown jump law '" + kind + "'");
}

}  // namespace ssmp
