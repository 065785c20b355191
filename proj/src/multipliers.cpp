#include "qwave/multipliers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qwave/errors.hpp"
#include "qwave/metric.hpp"

namespace qwave {

MultiplierProfile::MultiplierProfile(double gamma, int terms, double c) : gamma_(gamma), terms_(terms) {
  if (!(gamma > 0.0)) throw ParameterError("multiplier gamma must be positive");
  if (terms < 1) throw ParameterError("multiplier series needs at least one term");
  sup_b_ = 0.0;
  for (int j = 0; j < terms_; ++j) sup_b_ += std::exp2(-j * gamma_);
  c_ = c > 0.0 ? c : 4.0 * (1.0 + sup_b_);
  if (!std::isfinite(c_)) throw ParameterError("multiplier constant must be finite");
}

double MultiplierProfile::tail_bound(double r) const {
  // r / (r + 2^j) <= min(1, r 2^{-j}); both geometric sums are closed form.
  const double near = r * std::exp2(-terms_ * (1.0 + gamma_)) / (1.0 - std::exp2(-(1.0 + gamma_)));
  const double far = std::exp2(-terms_ * gamma_) / (1.0 - std::exp2(-gamma_));
  return std::min(near, far);
}

BWeight b_weight(const MultiplierProfile& p, double r) {
  if (!(r >= 0.0)) throw DomainError("b_weight needs r >= 0");
  BWeight w;
  for (int j = 0; j < p.terms(); ++j) {
    const double c = std::exp2(-j * p.gamma());
    const double d = std::exp2(j);
    const double s = r + d;
    w.b += c * r / s;
    w.db += c * d / (s * s);
    w.d2b -= 2.0 * c * d / (s * s * s);
  }
  return w;
}

AWeight a_weight(const MultiplierProfile& p, double r) {
  if (!(r >= 0.0)) throw DomainError("a_weight needs r >= 0");
  AWeight w;
  double cube = 0.0;  // sum c d / (r + d)^3
  for (int j = 0; j < p.terms(); ++j) {
    const double c = std::exp2(-j * p.gamma());
    const double d = std::exp2(j);
    const double s = r + d;
    w.a += c / s;
    w.da -= c / (s * s);
    w.d2a += 2.0 * c / (s * s * s);
    cube += c * d / (s * s * s);
  }
  // a'' + 2a'/r = -(2/r) sum c d / (r+d)^3, termwise.
  w.laplacian = r > 0.0 ? -2.0 * cube / r : -std::numeric_limits<double>::infinity();
  w.laplacian_r2 = -2.0 * r * cube;
  return w;
}

double nonlinear_weight(const MultiplierProfile& p, double r) {
  if (!(r >= 0.0)) throw DomainError("nonlinear_weight needs r >= 0");
  double sum = 0.0;
  for (int j = 0; j < p.terms(); ++j) {
    const double c = std::exp2(-j * p.gamma());
    const double s = r + std::exp2(j);
    sum += c * (0.5 / s + r / (6.0 * s * s));
  }
  return sum;
}

namespace {

void absorb(LowerBound& b, double value, double r) {
  if (value < b.infimum) {
    b.infimum = value;
    b.argmin = r;
  }
}

}  // namespace

LowerBoundReport certify_lower_bounds(const MultiplierProfile& p, std::span<const double> radii) {
  if (radii.empty()) throw ParameterError("certify_lower_bounds needs sample radii");
  LowerBoundReport rep;
  rep.gamma = p.gamma();
  rep.terms = p.terms();
  rep.samples = radii.size();
  const double inf = std::numeric_limits<double>::infinity();
  rep.radial_derivative = {"b_prime", inf, 0.0, false};
  rep.angular = {"b_over_r_minus_half_b_prime", inf, 0.0, false};
  rep.potential = {"minus_laplacian_a", inf, 0.0, false};
  rep.nonlinear = {"two_thirds_a_minus_sixth_b_prime", inf, 0.0, false};
  const double g = p.gamma();
  for (double r : radii) {
    if (!(r > 0.0)) throw DomainError("certify_lower_bounds needs strictly positive radii");
    const BWeight b = b_weight(p, r);
    const AWeight a = a_weight(p, r);
    const double br = bracket(r);
    absorb(rep.radial_derivative, b.db * std::pow(br, 1.0 + g), r);
    absorb(rep.angular, (b.b / r - 0.5 * b.db) * std::pow(br, 1.0 + g), r);
    absorb(rep.potential, -a.laplacian * std::pow(br, 3.0 + g), r);
    absorb(rep.nonlinear, (2.0 / 3.0 * a.a - b.db / 6.0) * r, r);
  }
  rep.certified = true;
  for (LowerBound* b : {&rep.radial_derivative, &rep.angular, &rep.potential, &rep.nonlinear}) {
    b->positive = b->infimum > 0.0;
    rep.certified = rep.certified && b->positive;
  }
  return rep;
}

std::vector<double> dyadic_radii(int lo, int hi, int per_octave) {
  if (hi < lo || per_octave < 1) throw ParameterError("dyadic_radii needs lo <= hi and per_octave >= 1");
  std::vector<double> r;
  for (int k = lo * per_octave; k <= hi * per_octave; ++k) r.push_back(std::exp2(static_cast<double>(k) / per_octave));
  return r;
}

void to_json(nlohmann::json& j, const LowerBound& b) {
  j = nlohmann::json{{"name", b.name}, {"infimum", b.infimum}, {"argmin", b.argmin}, {"positive", b.positive}};
}

void to_json(nlohmann::json& j, const LowerBoundReport& r) {
  j = nlohmann::json{{"gamma", r.gamma},
                     {"terms", r.terms},
                     {"samples", r.samples},
                     {"certified", r.certified},
                     {"bounds", {r.radial_derivative, r.angular, r.potential, r.nonlinear}}};
}

}  // namespace qwave
