#include "qwave/metric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "qwave/errors.hpp"

namespace qwave {

Mat4 minkowski() {
  Mat4 m{};
  m[0][0] = -1.0;
  m[1][1] = m[2][2] = m[3][3] = 1.0;
  return m;
}

std::string to_string(MetricFamily family) {
  switch (family) {
    case MetricFamily::Minkowski: return "minkowski";
    case MetricFamily::StaticDecay: return "static_decay";
    case MetricFamily::ConeAdapted: return "cone_adapted";
    case MetricFamily::Violating: return "violating";
    case MetricFamily::Sampled: return "sampled";
  }
  return "unknown";
}

MetricFamily metric_family_from_string(const std::string& name) {
  if (name == "minkowski") return MetricFamily::Minkowski;
  if (name == "static_decay" || name == "A") return MetricFamily::StaticDecay;
  if (name == "cone_adapted" || name == "B") return MetricFamily::ConeAdapted;
  if (name == "violating" || name == "C") return MetricFamily::Violating;
  throw ParameterError("unknown metric family '" + name + "'");
}

namespace {

// Second-order jet in (t, r): value and all derivatives up to order two.
struct Jet {
  double v = 0, t = 0, r = 0, tt = 0, tr = 0, rr = 0;

  static Jet constant(double c) { return {c, 0, 0, 0, 0, 0}; }
  static Jet time(double t) { return {t, 1, 0, 0, 0, 0}; }
  static Jet radius(double r) { return {r, 0, 1, 0, 0, 0}; }
};

Jet operator+(const Jet& a, const Jet& b) {
  return {a.v + b.v, a.t + b.t, a.r + b.r, a.tt + b.tt, a.tr + b.tr, a.rr + b.rr};
}
Jet operator-(const Jet& a, const Jet& b) {
  return {a.v - b.v, a.t - b.t, a.r - b.r, a.tt - b.tt, a.tr - b.tr, a.rr - b.rr};
}
Jet operator*(double s, const Jet& a) { return {s * a.v, s * a.t, s * a.r, s * a.tt, s * a.tr, s * a.rr}; }
Jet operator*(const Jet& a, const Jet& b) {
  return {a.v * b.v,
          a.t * b.v + a.v * b.t,
          a.r * b.v + a.v * b.r,
          a.tt * b.v + 2 * a.t * b.t + a.v * b.tt,
          a.tr * b.v + a.t * b.r + a.r * b.t + a.v * b.tr,
          a.rr * b.v + 2 * a.r * b.r + a.v * b.rr};
}

// f(x) for a scalar function with derivatives f0, f1, f2 at x.v.
Jet compose(const Jet& x, double f0, double f1, double f2) {
  return {f0,
          f1 * x.t,
          f1 * x.r,
          f2 * x.t * x.t + f1 * x.tt,
          f2 * x.t * x.r + f1 * x.tr,
          f2 * x.r * x.r + f1 * x.rr};
}

// <x>^p with derivatives.
Jet bracket_pow(const Jet& x, double p) {
  const double q = 1.0 + x.v * x.v;
  const double f0 = std::pow(q, 0.5 * p);
  const double f1 = p * x.v * std::pow(q, 0.5 * p - 1.0);
  const double f2 = p * std::pow(q, 0.5 * p - 1.0) + p * (p - 2.0) * x.v * x.v * std::pow(q, 0.5 * p - 2.0);
  return compose(x, f0, f1, f2);
}

Jet reciprocal(const Jet& x) {
  const double i = 1.0 / x.v;
  return compose(x, i, -i * i, 2.0 * i * i * i);
}

Jet cosine(const Jet& x) { return compose(x, std::cos(x.v), -std::sin(x.v), -std::cos(x.v)); }

// Metric whose only perturbed component is h^{00} = H(t, r).
class ScalarRadialMetric : public MetricField {
 public:
  explicit ScalarRadialMetric(MetricParams p) : MetricField(p) {}

  virtual Jet profile(double t, double r) const = 0;

  MetricSample eval(double t, const Vec3& x) const override {
    const double r = std::hypot(x[0], x[1], x[2]);
    const Jet h = profile(t, r);
    MetricSample s;
    s.g = minkowski();
    s.g[0][0] += h.v;
    s.dg[0][0][0] = h.t;
    s.d2g[0][0][0][0] = h.tt;
    if (r > 1e-12) {
      const Vec3 w{x[0] / r, x[1] / r, x[2] / r};
      for (int i = 0; i < 3; ++i) {
        s.dg[i + 1][0][0] = h.r * w[i];
        s.d2g[0][i + 1][0][0] = s.d2g[i + 1][0][0][0] = h.tr * w[i];
        for (int j = 0; j < 3; ++j) {
          const double ww = w[i] * w[j];
          s.d2g[i + 1][j + 1][0][0] = h.rr * ww + (h.r / r) * ((i == j ? 1.0 : 0.0) - ww);
        }
      }
    } else {
      // Smooth radial profile: d_r H = 0 and H_r / r -> H_rr at the origin.
      for (int i = 0; i < 3; ++i) s.d2g[i + 1][i + 1][0][0] = h.rr;
    }
    return s;
  }

  RadialCoefficients radial(double t, double r) const override {
    const Jet h = profile(t, r);
    RadialCoefficients c;
    c.g00 = -1.0 + h.v;
    c.g00_t = h.t;
    c.g00_r = h.r;
    return c;
  }
};

class Minkowski final : public ScalarRadialMetric {
 public:
  Minkowski() : ScalarRadialMetric(MetricParams{0.0, 0.1, 1.0, 0.0}) {}
  MetricFamily family() const override { return MetricFamily::Minkowski; }
  bool is_static() const override { return true; }
  Jet profile(double, double) const override { return {}; }
};

// h^{00} = -eps <r>^{-1-gamma}
class StaticDecay final : public ScalarRadialMetric {
 public:
  using ScalarRadialMetric::ScalarRadialMetric;
  MetricFamily family() const override { return MetricFamily::StaticDecay; }
  bool is_static() const override { return true; }
  Jet profile(double, double r) const override {
    return -params_.epsilon * bracket_pow(Jet::radius(r), -1.0 - params_.gamma);
  }
};

// h^{00} = -eps <t-r>^{1/2} / (<r>^gamma <t+r>^{1/2}) * r^2 / (r^2 + scale^2)
class ConeAdapted final : public ScalarRadialMetric {
 public:
  using ScalarRadialMetric::ScalarRadialMetric;
  MetricFamily family() const override { return MetricFamily::ConeAdapted; }
  bool is_static() const override { return false; }
  Jet profile(double t, double r) const override {
    const Jet tj = Jet::time(t);
    const Jet rj = Jet::radius(r);
    const Jet r2 = rj * rj;
    const Jet cutoff = r2 * reciprocal(r2 + Jet::constant(params_.scale * params_.scale));
    return -params_.epsilon * (bracket_pow(tj - rj, 0.5) * bracket_pow(rj, -params_.gamma) *
                               bracket_pow(tj + rj, -0.5) * cutoff);
  }
};

// h^{00} = eps cos(omega t): no decay in x.
class Violating final : public ScalarRadialMetric {
 public:
  using ScalarRadialMetric::ScalarRadialMetric;
  MetricFamily family() const override { return MetricFamily::Violating; }
  bool is_static() const override { return params_.omega == 0.0; }
  Jet profile(double t, double) const override {
    return params_.epsilon * cosine(params_.omega * Jet::time(t));
  }
};

class SampledMetric final : public MetricField {
 public:
  SampledMetric(PerturbationFn h, bool is_static, double step)
      : MetricField(MetricParams{}), h_(std::move(h)), static_(is_static), step_(step) {}

  MetricFamily family() const override { return MetricFamily::Sampled; }
  bool is_static() const override { return static_; }

  MetricSample eval(double t, const Vec3& x) const override {
    const auto full = [this](double tt, const Vec3& y) {
      Mat4 g = h_(tt, y);
      const Mat4 m = minkowski();
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) g[a][b] += m[a][b];
      return g;
    };
    return finite_difference_sample(full, t, x, step_);
  }

  RadialCoefficients radial(double t, double r) const override {
    const MetricSample s = eval(t, Vec3{r, 0.0, 0.0});
    RadialCoefficients c;
    c.g00 = s.g[0][0];
    c.g0r = s.g[0][1];
    c.grr = s.g[1][1];
    c.gT = s.g[2][2];
    c.g00_t = s.dg[0][0][0];
    c.g0r_t = s.dg[0][0][1];
    c.grr_t = s.dg[0][1][1];
    c.gT_t = s.dg[0][2][2];
    c.g00_r = s.dg[1][0][0];
    c.g0r_r = s.dg[1][0][1];
    c.grr_r = s.dg[1][1][1];
    c.gT_r = s.dg[1][2][2];
    return c;
  }

 private:
  PerturbationFn h_;
  bool static_;
  double step_;
};

void validate(const MetricParams& p) {
  if (!(p.epsilon >= 0.0) || p.epsilon > kMaxEpsilon)
    throw ParameterError("metric epsilon must lie in [0, 0.5]");
  if (!(p.gamma > 0.0)) throw ParameterError("metric gamma must be positive");
  if (!(p.scale > 0.0)) throw ParameterError("metric scale must be positive");
  if (!std::isfinite(p.omega)) throw ParameterError("metric omega must be finite");
}

}  // namespace

MetricPtr make_metric(MetricFamily family, const MetricParams& params) {
  if (family != MetricFamily::Minkowski) validate(params);
  switch (family) {
    case MetricFamily::Minkowski: return std::make_shared<Minkowski>();
    case MetricFamily::StaticDecay: return std::make_shared<StaticDecay>(params);
    case MetricFamily::ConeAdapted: return std::make_shared<ConeAdapted>(params);
    case MetricFamily::Violating: return std::make_shared<Violating>(params);
    case MetricFamily::Sampled: break;
  }
  throw ParameterError("sampled metrics are built with make_sampled_metric");
}

MetricPtr make_metric(const std::string& family, const MetricParams& params) {
  return make_metric(metric_family_from_string(family), params);
}

MetricPtr make_sampled_metric(PerturbationFn h, bool is_static, double fd_step) {
  if (!h) throw ParameterError("sampled metric needs a perturbation function");
  if (!(fd_step > 0.0)) throw ParameterError("finite-difference step must be positive");
  return std::make_shared<SampledMetric>(std::move(h), is_static, fd_step);
}

MetricSample finite_difference_sample(const std::function<Mat4(double, const Vec3&)>& g,
                                      double t, const Vec3& x, double step) {
  // Coordinates y = (t, x); shifted evaluation along up to two axes.
  const auto at = [&](int a, double da, int b, double db) {
    std::array<double, 4> y{t, x[0], x[1], x[2]};
    if (a >= 0) y[a] += da;
    if (b >= 0) y[b] += db;
    return g(y[0], Vec3{y[1], y[2], y[3]});
  };
  constexpr std::array<double, 4> off{-2.0, -1.0, 1.0, 2.0};
  constexpr std::array<double, 4> w1{1.0 / 12, -8.0 / 12, 8.0 / 12, -1.0 / 12};

  MetricSample s;
  const Mat4 g0 = at(-1, 0, -1, 0);
  s.g = g0;
  std::array<std::array<Mat4, 4>, 4> shifted{};  // shifted[m][k]: offset off[k] along m
  for (int m = 0; m < 4; ++m)
    for (int k = 0; k < 4; ++k) shifted[m][k] = at(m, off[k] * step, -1, 0);

  for (int m = 0; m < 4; ++m) {
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        double d1 = 0.0;
        for (int k = 0; k < 4; ++k) d1 += w1[k] * shifted[m][k][a][b];
        s.dg[m][a][b] = d1 / step;
        // (-f(-2) + 16 f(-1) - 30 f(0) + 16 f(1) - f(2)) / 12
        const double d2 = -shifted[m][0][a][b] + 16 * shifted[m][1][a][b] - 30 * g0[a][b] +
                          16 * shifted[m][2][a][b] - shifted[m][3][a][b];
        s.d2g[m][m][a][b] = d2 / (12.0 * step * step);
      }
  }
  for (int m = 0; m < 4; ++m)
    for (int n = m + 1; n < 4; ++n) {
      Mat4 acc{};
      for (int k = 0; k < 4; ++k)
        for (int l = 0; l < 4; ++l) {
          const Mat4 v = at(m, off[k] * step, n, off[l] * step);
          const double w = w1[k] * w1[l];
          for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) acc[a][b] += w * v[a][b];
        }
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) s.d2g[m][n][a][b] = s.d2g[n][m][a][b] = acc[a][b] / (step * step);
    }
  return s;
}

NullFrame NullFrame::at(const Vec3& x) {
  const double r = std::hypot(x[0], x[1], x[2]);
  if (!(r > 0.0)) throw DomainError("null frame is undefined at x = 0");
  const Vec3 w{x[0] / r, x[1] / r, x[2] / r};
  NullFrame f;
  f.lbar = {-1.0, w[0], w[1], w[2]};
  f.l = {1.0, w[0], w[1], w[2]};
  // Tangential basis: Gram-Schmidt against the least aligned coordinate axis.
  int k = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(w[i]) < std::abs(w[k])) k = i;
  Vec3 e{0.0, 0.0, 0.0};
  e[k] = 1.0;
  const double d = e[0] * w[0] + e[1] * w[1] + e[2] * w[2];
  for (int i = 0; i < 3; ++i) e[i] -= d * w[i];
  const double n = std::hypot(e[0], e[1], e[2]);
  f.e1 = {e[0] / n, e[1] / n, e[2] / n};
  f.e2 = {w[1] * f.e1[2] - w[2] * f.e1[1], w[2] * f.e1[0] - w[0] * f.e1[2], w[0] * f.e1[1] - w[1] * f.e1[0]};
  return f;
}

double null_contraction(const MetricField& metric, double t, const Vec3& x) {
  const NullFrame frame = NullFrame::at(x);
  const MetricSample s = metric.eval(t, x);
  const Mat4 m = minkowski();
  double sum = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) sum += (s.g[a][b] - m[a][b]) * frame.lbar[a] * frame.lbar[b];
  return sum;
}

double characteristic_speed(const RadialCoefficients& c) {
  const double disc = c.g0r * c.g0r - c.g00 * c.grr;
  if (!(disc >= 0.0) || c.g00 == 0.0) return std::numeric_limits<double>::infinity();
  const double root = std::sqrt(disc);
  return std::max(std::abs((c.g0r + root) / c.g00), std::abs((c.g0r - root) / c.g00));
}

namespace {

struct Weighted {
  double size = 0, null_size = 0, d1 = 0, d2 = 0;
};

Weighted weighted_sample(const MetricField& metric, double gamma, double t, const Vec3& x) {
  const double r = std::hypot(x[0], x[1], x[2]);
  const MetricSample s = metric.eval(t, x);
  const Mat4 m = minkowski();
  double h = 0.0, dh = 0.0, d2h = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      h = std::max(h, std::abs(s.g[a][b] - m[a][b]));
      for (int mu = 0; mu < 4; ++mu) {
        dh = std::max(dh, std::abs(s.dg[mu][a][b]));
        for (int nu = 0; nu < 4; ++nu) d2h = std::max(d2h, std::abs(s.d2g[mu][nu][a][b]));
      }
    }
  const double xw = std::pow(bracket(r), gamma);
  Weighted w;
  w.size = h * xw * std::sqrt(bracket(t + r) / bracket(t - r));
  if (r > 0.0) w.null_size = std::abs(null_contraction(metric, t, x)) * xw * bracket(t + r) / bracket(t - r);
  w.d1 = dh * bracket(r) * xw;
  w.d2 = d2h * bracket(r) * bracket(r) * xw;
  return w;
}

void absorb(HypothesisBound& b, int box, double value, double t, double r) {
  b.nested[box] = std::max(b.nested[box], value);
  if (value > b.amplitude) {
    b.amplitude = value;
    b.worst_t = t;
    b.worst_r = r;
  }
}

void flag_growth(HypothesisBound& b, double tol) {
  const auto grows = [tol](double lo, double hi) { return hi > lo * (1.0 + tol) && hi > 0.0; };
  b.unbounded = grows(b.nested[0], b.nested[1]) && grows(b.nested[1], b.nested[2]);
}

}  // namespace

DecayReport certify_decay(const MetricField& metric, double gamma, const SamplingSpec& samples) {
  if (samples.nt < 1 || samples.nr < 1 || samples.directions.empty())
    throw ParameterError("certify_decay needs a non-empty sample set");
  if (!(samples.t_max >= 0.0) || !(samples.r_max >= 0.0))
    throw ParameterError("certify_decay needs a non-negative sample box");
  if (!(gamma > 0.0)) throw ParameterError("certify_decay needs gamma > 0");

  DecayReport rep;
  rep.family = metric.name();
  rep.gamma = gamma;
  rep.samples = samples;
  rep.size.name = "size";
  rep.null_size.name = "null_size";
  rep.first_derivative.name = "first_derivative";
  rep.second_derivative.name = "second_derivative";

  constexpr std::array<double, 3> dilation{0.25, 0.5, 1.0};
  for (int box = 0; box < 3; ++box) {
    const double tb = samples.t_max * dilation[box];
    const double rb = samples.r_max * dilation[box];
    const auto axis = [](double hi, int n, int k) { return n == 1 ? hi : hi * k / (n - 1); };
    std::vector<std::pair<double, double>> points;
    for (int i = 0; i < samples.nt; ++i)
      for (int k = 0; k < samples.nr; ++k) points.emplace_back(axis(tb, samples.nt, i), axis(rb, samples.nr, k));
    // Near-cone points t = r.
    const int nc = std::max(samples.nt, samples.nr);
    for (int k = 0; k < nc; ++k) {
      const double s = axis(std::min(tb, rb), nc, k);
      points.emplace_back(s, s);
    }
    for (const Vec3& dir : samples.directions) {
      const double n = std::hypot(dir[0], dir[1], dir[2]);
      if (!(n > 0.0)) throw ParameterError("sampling direction must be non-zero");
      for (const auto& [t, r] : points) {
        const Vec3 x{r * dir[0] / n, r * dir[1] / n, r * dir[2] / n};
        const Weighted w = weighted_sample(metric, gamma, t, x);
        absorb(rep.size, box, w.size, t, r);
        if (r > 0.0) absorb(rep.null_size, box, w.null_size, t, r);
        absorb(rep.first_derivative, box, w.d1, t, r);
        absorb(rep.second_derivative, box, w.d2, t, r);
        ++rep.sample_count;
      }
    }
  }
  for (HypothesisBound* b : {&rep.size, &rep.null_size, &rep.first_derivative, &rep.second_derivative})
    flag_growth(*b, samples.growth_tolerance);
  return rep;
}

void to_json(nlohmann::json& j, const HypothesisBound& b) {
  j = nlohmann::json{{"name", b.name},
                     {"amplitude", b.amplitude},
                     {"worst_t", b.worst_t},
                     {"worst_r", b.worst_r},
                     {"nested_sup", b.nested},
                     {"unbounded", b.unbounded}};
}

void to_json(nlohmann::json& j, const DecayReport& r) {
  nlohmann::json dirs = nlohmann::json::array();
  for (const auto& d : r.samples.directions) dirs.push_back(d);
  j = nlohmann::json{{"family", r.family},
                     {"gamma", r.gamma},
                     {"samples",
                      {{"t_max", r.samples.t_max},
                       {"r_max", r.samples.r_max},
                       {"nt", r.samples.nt},
                       {"nr", r.samples.nr},
                       {"directions", dirs},
                       {"count", r.sample_count},
                       {"growth_tolerance", r.samples.growth_tolerance}}},
                     {"size", r.size},
                     {"null_size", r.null_size},
                     {"first_derivative", r.first_derivative},
                     {"second_derivative", r.second_derivative}};
}

}  // namespace qwave
