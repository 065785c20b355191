#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace qwave {

/// Dyadic Morawetz weights
///   b(r) = sum_{j < terms} 2^{-j gamma} r / (r + 2^j),   a(r) = b(r) / r,
/// and the constant C in front of d_t u in the multiplier a u + b d_r u + C d_t u.
class MultiplierProfile {
 public:
  /// C <= 0 selects the default 4 (1 + sup b).
  explicit MultiplierProfile(double gamma = 0.1, int terms = 200, double c = 0.0);

  double gamma() const { return gamma_; }
  int terms() const { return terms_; }
  double c() const { return c_; }

  /// lim_{r -> inf} b(r) for the truncated series.
  double sup_b() const { return sup_b_; }

  /// Upper bound on the neglected tail sum_{j >= terms} of b at radius r.
  double tail_bound(double r) const;

 private:
  double gamma_;
  int terms_;
  double c_;
  double sup_b_;
};

struct BWeight {
  double b = 0, db = 0, d2b = 0;
};

struct AWeight {
  double a = 0, da = 0, d2a = 0;
  /// Delta a = a'' + 2a'/r; -infinity at r = 0.
  double laplacian = 0;
  /// r^2 Delta a, finite everywhere (zero at the origin).
  double laplacian_r2 = 0;
};

BWeight b_weight(const MultiplierProfile& p, double r);
AWeight a_weight(const MultiplierProfile& p, double r);

/// (2/3) a - (1/6) b' summed termwise in the form
///   sum_j 2^{-j gamma} ( (1/2) / (r + 2^j) + (1/6) r / (r + 2^j)^2 ).
double nonlinear_weight(const MultiplierProfile& p, double r);

struct LowerBound {
  std::string name;
  double infimum = 0.0;
  double argmin = 0.0;
  bool positive = false;
};

struct LowerBoundReport {
  double gamma = 0.0;
  int terms = 0;
  std::size_t samples = 0;
  LowerBound radial_derivative;  ///< b' <r>^{1+g}
  LowerBound angular;            ///< (b/r - b'/2) <r>^{1+g}
  LowerBound potential;          ///< (-Delta a) <r>^{3+g}
  LowerBound nonlinear;          ///< ((2/3) a - (1/6) b') r
  bool certified = false;        ///< all four infima strictly positive
};

/// Infima of the weighted lower bounds over strictly positive sample radii.
/// A non-positive infimum is reported (certified = false), never thrown.
LowerBoundReport certify_lower_bounds(const MultiplierProfile& p, std::span<const double> radii);

/// Radii 2^{k/per_octave} for k spanning [2^lo, 2^hi].
std::vector<double> dyadic_radii(int lo, int hi, int per_octave = 8);

void to_json(nlohmann::json& j, const LowerBound& b);
void to_json(nlohmann::json& j, const LowerBoundReport& r);

}  // namespace qwave
