#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

namespace qwave {

using Vec3 = std::array<double, 3>;
using Vec4 = std::array<double, 4>;
using Mat4 = std::array<std::array<double, 4>, 4>;

/// Minkowski inverse metric diag(-1, 1, 1, 1).
Mat4 minkowski();

/// Japanese bracket <s> = sqrt(1 + s^2).
inline double bracket(double s) { return std::sqrt(1.0 + s * s); }

/// Inverse metric g^{ab}(t,x) with first and second Cartesian derivatives.
/// Index 0 is time; dg[m] = d_m g, d2g[m][n] = d_m d_n g.
struct MetricSample {
  Mat4 g{};
  std::array<Mat4, 4> dg{};
  std::array<std::array<Mat4, 4>, 4> d2g{};
};

/// Radial reduction of a spherically symmetric inverse metric:
///   g^{00} = g00,  g^{0i} = g0r w^i,  g^{ij} = grr w^i w^j + gT (delta^{ij} - w^i w^j)
/// with w = x/|x|, together with d_t and d_r of each component.
struct RadialCoefficients {
  double g00 = -1.0, g0r = 0.0, grr = 1.0, gT = 1.0;
  double g00_t = 0.0, g0r_t = 0.0, grr_t = 0.0, gT_t = 0.0;
  double g00_r = 0.0, g0r_r = 0.0, grr_r = 0.0, gT_r = 0.0;
};

enum class MetricFamily { Minkowski, StaticDecay, ConeAdapted, Violating, Sampled };

std::string to_string(MetricFamily family);
MetricFamily metric_family_from_string(const std::string& name);

/// Family parameters. `scale` is the cutoff length of the cone-adapted family,
/// `omega` the oscillation frequency of the violating family.
struct MetricParams {
  double epsilon = 0.05;
  double gamma = 0.1;
  double scale = 1.0;
  double omega = 0.0;
};

/// Evaluable Lorentzian metric g = m + h. Implementations are immutable and
/// safe to evaluate concurrently.
class MetricField {
 public:
  virtual ~MetricField() = default;

  virtual MetricFamily family() const = 0;
  virtual MetricSample eval(double t, const Vec3& x) const = 0;
  virtual RadialCoefficients radial(double t, double r) const = 0;
  /// True when no component depends on t.
  virtual bool is_static() const = 0;

  const MetricParams& params() const { return params_; }
  std::string name() const { return to_string(family()); }

 protected:
  explicit MetricField(MetricParams params) : params_(params) {}
  MetricParams params_;
};

using MetricPtr = std::shared_ptr<const MetricField>;

/// Largest value of epsilon accepted by the shipped families. Keeps |g^{00}| >= 1/2.
inline constexpr double kMaxEpsilon = 0.5;

/// Builds a shipped family. Throws ParameterError for invalid parameters.
MetricPtr make_metric(MetricFamily family, const MetricParams& params = {});
MetricPtr make_metric(const std::string& family, const MetricParams& params = {});

/// User-supplied perturbation h^{ab}(t,x); derivatives by 4th-order central differences.
using PerturbationFn = std::function<Mat4(double t, const Vec3& x)>;
MetricPtr make_sampled_metric(PerturbationFn h, bool is_static, double fd_step = 1e-3);

/// Same layout as MetricField::eval, result of 4th-order central differences of `g`.
MetricSample finite_difference_sample(const std::function<Mat4(double, const Vec3&)>& g,
                                      double t, const Vec3& x, double step);

/// Null frame at a point away from the origin.
struct NullFrame {
  Vec4 lbar{};  ///< components (-1, x/|x|) of Lbar = w^i d_i - d_t
  Vec4 l{};     ///< components (1, x/|x|) of L = w^i d_i + d_t
  Vec3 e1{}, e2{};  ///< orthonormal tangential directions on the sphere

  static NullFrame at(const Vec3& x);
};

/// h^{Lbar Lbar} = h^{00} - 2 h^{0i} w^i + h^{ij} w^i w^j. Throws DomainError at x = 0.
double null_contraction(const MetricField& metric, double t, const Vec3& x);

/// Characteristic speeds of the radial operator at one point: the larger |root| of
/// g00 c^2 - 2 g0r c + grr = 0.
double characteristic_speed(const RadialCoefficients& c);

/// Samples for decay certification: a (t,r) box [0,t_max] x [0,r_max] plus its
/// 1/2 and 1/4 dilations, each with nt x nr points, near-cone points t = r,
/// along each listed direction.
struct SamplingSpec {
  double t_max = 40.0;
  double r_max = 40.0;
  int nt = 81;
  int nr = 81;
  std::vector<Vec3> directions{{1.0, 0.0, 0.0}, {0.0, 0.6, 0.8}};
  /// Relative growth between nested boxes above which a bound is flagged unbounded.
  double growth_tolerance = 0.02;
};

struct HypothesisBound {
  std::string name;
  double amplitude = 0.0;     ///< sup of the weighted quantity over all samples
  double worst_t = 0.0;
  double worst_r = 0.0;
  std::array<double, 3> nested{};  ///< sup over the 1/4, 1/2 and full boxes
  bool unbounded = false;
};

struct DecayReport {
  std::string family;
  double gamma = 0.0;
  SamplingSpec samples;
  std::size_t sample_count = 0;
  HypothesisBound size;        ///< |h| <t+r>^{1/2} <x>^g / <t-r>^{1/2}
  HypothesisBound null_size;   ///< |h^{LbarLbar}| <t+r> <x>^g / <t-r>
  HypothesisBound first_derivative;   ///< |dh| <x>^{1+g}
  HypothesisBound second_derivative;  ///< |d^2 h| <x>^{2+g}
};

DecayReport certify_decay(const MetricField& metric, double gamma, const SamplingSpec& samples);

void to_json(nlohmann::json& j, const HypothesisBound& b);
void to_json(nlohmann::json& j, const DecayReport& r);

}  // namespace qwave
