#include "qwave/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <locale>
#include <sstream>

#include "qwave/errors.hpp"

namespace qwave {

double G_function(double theta) {
  if (!(theta >= 0.0)) throw DomainError("G needs a non-negative argument");
  return theta + std::cbrt(theta);
}

void TimeTrapezoid::add(double t, double f) {
  if (started_) sum_ += 0.5 * (t - last_t_) * (f + last_f_);
  started_ = true;
  last_t_ = t;
  last_f_ = f;
}

bool same_time(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); }

bool in_interval(double t, double t1, double t2) {
  return (t >= t1 || same_time(t, t1)) && (t <= t2 || same_time(t, t2));
}

namespace {

// Minkowski reference coefficients, for splitting off the h-parts of densities.
const OperatorCoefficients kFlat{};

double sixth(double u) {
  const double u2 = u * u;
  return u2 * u2 * u2;
}

double quad(const OperatorCoefficients& k, double v, double ur) {
  return k.G00 * v * v + 2.0 * k.G0r * v * ur + k.Grr * ur * ur;
}

// Coefficients at an off-grid point on a cone.
OperatorCoefficients point_coefficients(const MetricField* field, OperatorMode mode, double t, double r) {
  if (!field) return kFlat;
  return operator_coefficients(field->radial(t, r), mode);
}

// Energy current: J^0 and J^r for the d_t u multiplier.
double energy_J0(const OperatorCoefficients& k, double u, double v, double ur) {
  return 0.5 * k.G00 * v * v - 0.5 * k.Grr * ur * ur - k.s * sixth(u) / 6.0;
}
double energy_Jr(const OperatorCoefficients& k, double v, double ur) { return (k.G0r * v + k.Grr * ur) * v; }

double energy_source(const OperatorCoefficients& k, double u, double v, double ur, double f) {
  return k.s * f * v - 0.5 * (k.G00_t * v * v + 2.0 * k.G0r_t * v * ur + k.Grr_t * ur * ur) -
         k.s_t * sixth(u) / 6.0;
}

// Conformal current for Xu = tau v + r ur + u.
double conformal_K0(const OperatorCoefficients& k, double tau, double u, double v, double ur, double xu) {
  return (k.G00 * v + k.G0r * ur) * xu - 0.5 * tau * quad(k, v, ur) - tau * k.s * sixth(u) / 6.0;
}
double conformal_Kr(const OperatorCoefficients& k, double r, double u, double v, double ur, double xu) {
  return (k.G0r * v + k.Grr * ur) * xu - 0.5 * r * quad(k, v, ur) - r * k.s * sixth(u) / 6.0;
}

double l2_norm(const RadialGrid& g, std::span<const double> f) {
  std::vector<double> sq(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) sq[i] = f[i] * f[i];
  return std::sqrt(std::max(integrate_region(g, sq, Region::all()), 0.0));
}

double gradient_l2(const StepView& view) {
  std::vector<double> d(view.state.grid.n);
  for (int i = 0; i < view.state.grid.n; ++i) d[i] = view.state.v[i] * view.state.v[i] + view.ur[i] * view.ur[i];
  return std::sqrt(std::max(integrate_region(view.state.grid, d, Region::all()), 0.0));
}

int slot(double t, double t1, double t2) {
  if (same_time(t, t1)) return 0;
  if (same_time(t, t2)) return 1;
  return -1;
}

// Region clipped to the stored grid.
Region ball_on(const RadialGrid& g, double radius) { return Region::ball(std::min(radius, g.last())); }
Region exterior_on(const RadialGrid& g, double radius) { return Region::exterior(std::min(radius, g.last())); }

}  // namespace

// ---------------------------------------------------------------------------

LE1Parts le1_slice(const FieldState& state, std::span<const double> ur, double gamma) {
  const RadialGrid& g = state.grid;
  std::vector<double> grad(g.n), pot(g.n), sex(g.n);
  for (int i = 0; i < g.n; ++i) {
    const double br = bracket(g.r(i));
    const double u = state.u[i];
    grad[i] = (state.v[i] * state.v[i] + ur[i] * ur[i]) / std::pow(br, 1.0 + gamma);
    pot[i] = u * u / std::pow(br, 3.0 + gamma);
    sex[i] = sixth(u) / br;
  }
  LE1Parts p;
  p.gradient = integrate_region(g, grad, Region::all());
  p.potential = integrate_region(g, pot, Region::all());
  p.sextic = integrate_region(g, sex, Region::all());
  return p;
}

LE1Accumulator::LE1Accumulator(double gamma, double t1, double t2) : gamma_(gamma), t1_(t1), t2_(t2) {
  if (!(gamma > 0.0)) throw ParameterError("LE1 gamma must be positive");
  if (!(t2 >= t1)) throw ParameterError("LE1 interval needs t1 <= t2");
}

void LE1Accumulator::observe(const StepView& view) {
  const double t = view.state.t;
  if (!in_interval(t, t1_, t2_)) return;
  const LE1Parts now = le1_slice(view.state, view.ur, gamma_);
  if (started_) {
    const double h = 0.5 * (t - last_t_);
    parts_.gradient += h * (now.gradient + last_.gradient);
    parts_.potential += h * (now.potential + last_.potential);
    parts_.sextic += h * (now.sextic + last_.sextic);
  }
  started_ = true;
  last_ = now;
  last_t_ = t;
}

LE1Parts le1_accumulate(std::span<const FieldState> states, double gamma, double t1, double t2) {
  LE1Accumulator acc(gamma, t1, t2);
  for (const FieldState& s : states) {
    const std::vector<double> ur = radial_gradient(s.grid, s.u);
    const StepView view{s, ur, {}, {}, {}, nullptr, OperatorMode::Divergence, 0.0, 0};
    acc.observe(view);
  }
  return acc.parts();
}

// ---------------------------------------------------------------------------

double flux_density(const PointValues& p) {
  const double lu = p.v + p.ur;
  return 0.5 * lu * lu + sixth(p.u) / 6.0;
}

FluxAccumulator::FluxAccumulator(ConeRegion cone) : integrator_(cone, flux_density) {}

void FluxAccumulator::observe(const StepView& view) { integrator_.observe(view.state); }

double flux(std::span<const FieldState> states, const ConeRegion& cone) {
  return cone_integrate(states, cone, flux_density);
}

// ---------------------------------------------------------------------------
// Energy identity

double EnergyFluxAudit::interior_residual() const {
  return (energy_int[1] + slice_h_int[1]) - (energy_int[0] + slice_h_int[0]) - flux - lateral_h + bulk_int;
}

double EnergyFluxAudit::exterior_residual() const {
  return (energy_ext[1] + slice_h_ext[1]) + flux + lateral_h - (energy_ext[0] + slice_h_ext[0]) + bulk_ext;
}

double EnergyFluxAudit::ext_lhs() const { return energy_ext[1] + flux; }

double EnergyFluxAudit::ext_rhs() const {
  return energy_ext[0] + bracket(R) * le1 + forcing_l1l2 * gradient_linf;
}

EnergyFluxObserver::EnergyFluxObserver(ConeRegion cone, double gamma)
    : flux_(cone, flux_density),
      lateral_total_(cone, [this](const PointValues& p) {
        const OperatorCoefficients k = point_coefficients(field_, mode_, p.t, p.r);
        return energy_Jr(k, p.v, p.ur) - energy_J0(k, p.u, p.v, p.ur);
      }),
      le1_(gamma, cone.t1, cone.t2) {
  a_.cone = cone;
  a_.gamma = gamma;
  a_.R = cone.c;
}

void EnergyFluxObserver::observe(const StepView& view) {
  const FieldState& s = view.state;
  const double t = s.t;
  const ConeRegion& cone = a_.cone;
  if (!in_interval(t, cone.t1, cone.t2)) return;
  field_ = view.field;
  mode_ = view.mode;
  const RadialGrid& g = s.grid;
  const double rho = cone.radius(t);
  if (rho > g.last()) throw AccuracyError("cone leaves the grid");

  flux_.observe(s);
  lateral_total_.observe(s);
  le1_.observe(view);

  std::vector<double> src(g.n), em(g.n), eh(g.n);
  for (int i = 0; i < g.n; ++i) {
    const OperatorCoefficients& k = view.coefficients[i];
    const double u = s.u[i], v = s.v[i], ur = view.ur[i];
    src[i] = energy_source(k, u, v, ur, view.forcing[i]);
    em[i] = -energy_J0(kFlat, u, v, ur);
    eh[i] = -energy_J0(k, u, v, ur) - em[i];
  }
  bulk_int_.add(t, integrate_region(g, src, ball_on(g, rho)));
  bulk_ext_.add(t, integrate_region(g, src, exterior_on(g, rho)));
  {
    std::vector<double> work(g.n), metric(g.n);
    for (int i = 0; i < g.n; ++i) {
      const OperatorCoefficients& k = view.coefficients[i];
      work[i] = k.s * view.forcing[i] * s.v[i];
      metric[i] = work[i] - src[i];
    }
    work_ext_.add(t, integrate_region(g, work, exterior_on(g, rho)));
    metric_ext_.add(t, integrate_region(g, metric, exterior_on(g, rho)));
  }
  f_norm_.add(t, l2_norm(g, view.forcing));
  a_.gradient_linf = std::max(a_.gradient_linf, gradient_l2(view));

  const int j = slot(t, cone.t1, cone.t2);
  if (j >= 0) {
    seen_[j] = true;
    a_.energy_int[j] = integrate_region(g, em, ball_on(g, rho));
    a_.energy_ext[j] = integrate_region(g, em, exterior_on(g, rho));
    a_.slice_h_int[j] = integrate_region(g, eh, ball_on(g, rho));
    a_.slice_h_ext[j] = integrate_region(g, eh, exterior_on(g, rho));
    if (j == 0) a_.energy0 = integrate_region(g, em, Region::all());
  }
}

EnergyFluxAudit EnergyFluxObserver::result() const {
  if (!seen_[0] || !seen_[1]) throw AccuracyError("energy-flux audit did not observe both interval ends");
  EnergyFluxAudit a = a_;
  a.flux = flux_.value();
  a.lateral_h = lateral_total_.value() - a.flux;
  a.bulk_int = bulk_int_.value();
  a.bulk_ext = bulk_ext_.value();
  a.forcing_work_ext = work_ext_.value();
  a.metric_bulk_ext = metric_ext_.value();
  a.le1 = le1_.value();
  a.forcing_l1l2 = f_norm_.value();
  return a;
}

// ---------------------------------------------------------------------------
// Conformal identity

double conformal_P(const FieldState& state, std::span<const double> ur, double c) {
  const RadialGrid& g = state.grid;
  const double tau = state.t + c;
  if (!(tau > 0.0)) throw DomainError("P(T) needs T + c > 0");
  std::vector<double> d(g.n);
  for (int i = 0; i < g.n; ++i) {
    const double r = g.r(i), u = state.u[i], v = state.v[i], w = ur[i];
    const double xu = tau * v + r * w + u;
    const double ang = w * w - (r * w / tau) * (r * w / tau);
    d[i] = 0.5 * tau * ((xu / tau) * (xu / tau) + ang) + u * u / tau + tau * sixth(u) / 6.0;
  }
  return integrate_region(g, d, ball_on(g, tau));
}

double ConformalAudit::residual() const {
  return P[1] - P[0] - lateral_X + bulk - lateral_h - slice_h[1] + slice_h[0];
}

double ConformalAudit::int_rhs() const {
  const double t1 = cone.t1, t2 = cone.t2;
  return (t1 + R + 1.0) / t2 * energy_D_T1 + energy0 / std::pow(t2, gamma) + G_function(flux) +
         bracket(R) * le1 + forcing_l1l2 * gradient_linf;
}

ConformalObserver::ConformalObserver(ConeRegion cone, double gamma)
    : lateral_X_(cone,
                 [c = cone.c](const PointValues& p) {
                   const double tau = p.t + c;
                   const double xu = tau * p.v + p.r * p.ur + p.u;
                   return xu * xu / tau;
                 }),
      lateral_h_(cone,
                 [this](const PointValues& p) {
                   const double tau = p.t + a_.cone.c;
                   const double xu = tau * p.v + p.r * p.ur + p.u;
                   const OperatorCoefficients k = point_coefficients(field_, mode_, p.t, p.r);
                   const double g = conformal_Kr(k, p.r, p.u, p.v, p.ur, xu) - conformal_K0(k, tau, p.u, p.v, p.ur, xu);
                   const double m = conformal_Kr(kFlat, p.r, p.u, p.v, p.ur, xu) -
                                    conformal_K0(kFlat, tau, p.u, p.v, p.ur, xu);
                   return g - m;
                 }),
      flux_(cone, flux_density),
      le1_(gamma, cone.t1, cone.t2) {
  a_.cone = cone;
  a_.gamma = gamma;
  a_.R = cone.c;
}

void ConformalObserver::observe(const StepView& view) {
  const FieldState& s = view.state;
  const double t = s.t;
  const ConeRegion& cone = a_.cone;
  if (!in_interval(t, cone.t1, cone.t2)) return;
  field_ = view.field;
  mode_ = view.mode;
  const RadialGrid& g = s.grid;
  const double tau = t + cone.c;
  if (tau > g.last()) throw AccuracyError("cone leaves the grid");

  lateral_X_.observe(s);
  lateral_h_.observe(s);
  flux_.observe(s);
  le1_.observe(view);

  std::vector<double> u6(g.n), met(g.n), frc(g.n), kh(g.n);
  for (int i = 0; i < g.n; ++i) {
    const OperatorCoefficients& k = view.coefficients[i];
    const double r = g.r(i), u = s.u[i], v = s.v[i], ur = view.ur[i];
    const double xu = tau * v + r * ur + u;
    const double x1G = (tau * k.G00_t + r * k.G00_r) * v * v + 2.0 * (tau * k.G0r_t + r * k.G0r_r) * v * ur +
                       (tau * k.Grr_t + r * k.Grr_r) * ur * ur;
    const double x1s = tau * k.s_t + r * k.s_r;
    u6[i] = k.s * sixth(u) / 3.0;
    met[i] = -0.5 * x1G - x1s * sixth(u) / 6.0;
    frc[i] = k.s * view.forcing[i] * xu;
    kh[i] = conformal_K0(k, tau, u, v, ur, xu) - conformal_K0(kFlat, tau, u, v, ur, xu);
  }
  const Region inside = ball_on(g, tau);
  u6_.add(t, integrate_region(g, u6, inside));
  metric_.add(t, integrate_region(g, met, inside));
  forcing_.add(t, integrate_region(g, frc, inside));
  f_norm_.add(t, l2_norm(g, view.forcing));
  a_.gradient_linf = std::max(a_.gradient_linf, gradient_l2(view));

  const int j = slot(t, cone.t1, cone.t2);
  if (j >= 0) {
    seen_[j] = true;
    a_.P[j] = conformal_P(s, view.ur, cone.c);
    a_.slice_h[j] = integrate_region(g, kh, inside);
    a_.slice_h_int[j] = integrate_region(g, kh, Region::ball(0.5 * tau));
    a_.slice_h_ext[j] = integrate_region(g, kh, Region::annulus(0.5 * tau, tau));
    std::vector<double> em(g.n), sx(g.n);
    for (int i = 0; i < g.n; ++i) {
      em[i] = -energy_J0(kFlat, s.u[i], s.v[i], view.ur[i]);
      sx[i] = sixth(s.u[i]);
    }
    if (j == 0) {
      a_.energy_D_T1 = integrate_region(g, em, inside);
      a_.energy0 = integrate_region(g, em, Region::all());
    } else {
      a_.u6_T2 = integrate_region(g, sx, inside);
    }
  }
}

ConformalAudit ConformalObserver::result() const {
  if (!seen_[0] || !seen_[1]) throw AccuracyError("conformal audit did not observe both interval ends");
  ConformalAudit a = a_;
  a.lateral_X = lateral_X_.value();
  a.lateral_h = lateral_h_.value();
  a.flux = flux_.value();
  a.bulk_u6 = u6_.value();
  a.bulk_metric = metric_.value();
  a.bulk_forcing = forcing_.value();
  a.bulk = a.bulk_u6 + a.bulk_metric + a.bulk_forcing;
  a.le1 = le1_.value();
  a.forcing_l1l2 = f_norm_.value();
  return a;
}

// ---------------------------------------------------------------------------
// Morawetz multiplier identity

double MultiplierAudit::residual() const { return (-boundary[1]) - (-boundary[0]) - bulk; }

double MultiplierAudit::K() const { return energy[0] > 0.0 ? (le1 + energy[1]) / energy[0] : 0.0; }

MultiplierObserver::MultiplierObserver(const MultiplierProfile& profile, double t1, double t2)
    : profile_(profile), le1_(profile.gamma(), t1, t2) {
  if (!(t2 > t1)) throw ParameterError("multiplier audit needs t1 < t2");
  a_.gamma = profile.gamma();
  a_.C = profile.c();
  a_.t1 = t1;
  a_.t2 = t2;
  a_.equivalence_min = std::numeric_limits<double>::infinity();
  a_.equivalence_max = 0.0;
}

void MultiplierObserver::prepare(const RadialGrid& grid) {
  if (cached_n_ == grid.n && cached_dr_ == grid.dr) return;
  b_.resize(grid.n);
  a_w_.resize(grid.n);
  for (int i = 0; i < grid.n; ++i) {
    b_[i] = b_weight(profile_, grid.r(i));
    a_w_[i] = a_weight(profile_, grid.r(i));
  }
  cached_n_ = grid.n;
  cached_dr_ = grid.dr;
}

namespace {

double max_abs_h(const RadialCoefficients& c) {
  return std::max({std::abs(c.g00 + 1.0), std::abs(c.g0r), std::abs(c.grr - 1.0), std::abs(c.gT - 1.0)});
}

double max_abs_dh(const RadialCoefficients& c) {
  return std::max({std::abs(c.g00_t), std::abs(c.g0r_t), std::abs(c.grr_t), std::abs(c.gT_t), std::abs(c.g00_r),
                   std::abs(c.g0r_r), std::abs(c.grr_r), std::abs(c.gT_r)});
}

}  // namespace

void MultiplierObserver::observe(const StepView& view) {
  const FieldState& s = view.state;
  const double t = s.t;
  if (!in_interval(t, a_.t1, a_.t2)) return;
  const RadialGrid& g = s.grid;
  prepare(g);
  le1_.observe(view);
  const double C = profile_.c();
  const bool have_metric = view.metric.size() == static_cast<std::size_t>(g.n);

  std::vector<double> n0(g.n), bulk(g.n), mink(g.n), err(g.n), bound(g.n), frc(g.n), qc(g.n), lin(g.n), em(g.n);
  for (int i = 0; i < g.n; ++i) {
    const OperatorCoefficients& k = view.coefficients[i];
    const double r = g.r(i), u = s.u[i], v = s.v[i], ur = view.ur[i];
    const BWeight& bw = b_[i];
    const AWeight& aw = a_w_[i];
    const double a = aw.a, da = aw.da, b = bw.b, db = bw.db;
    const double lap_a = r > 0.0 ? aw.laplacian_r2 / (r * r) : 0.0;  // weight r^2 vanishes at the origin
    const double mu = a * u + b * ur + C * v;
    const double w0 = k.G00 * v + k.G0r * ur, wr = k.G0r * v + k.Grr * ur;
    const double q = quad(k, v, ur);
    const double u6 = sixth(u);
    n0[i] = w0 * mu - 0.5 * C * q - 0.5 * da * k.G0r * u * u - C * k.s * u6 / 6.0;
    const double dG_t = k.G00_t * v * v + 2.0 * k.G0r_t * v * ur + k.Grr_t * ur * ur;
    const double dG_r = k.G00_r * v * v + 2.0 * k.G0r_r * v * ur + k.Grr_r * ur * ur;
    double bk = db * ur * wr - 0.5 * (db + 2.0 * a) * q - 0.5 * (C * dG_t + b * dG_r) + a * q;
    bk += -0.5 * (k.G0r_t * da + k.Grr_r * da + k.Grr * lap_a) * u * u;
    bk += -(db + 2.0 * a) * k.s * u6 / 6.0 - (C * k.s_t + b * k.s_r) * u6 / 6.0 + k.s * a * u6;
    frc[i] = k.s * view.forcing[i] * mu;
    bulk[i] = bk + frc[i];
    mink[i] = 0.5 * db * (ur * ur + v * v) - 0.5 * lap_a * u * u + (2.0 / 3.0 * a - db / 6.0) * u6;
    err[i] = std::abs(bk - mink[i]);
    if (have_metric) {
      const double bx = bracket(r);
      const double grad = std::sqrt(v * v + ur * ur);
      bound[i] = (max_abs_h(view.metric[i]) / bx + max_abs_dh(view.metric[i])) * (grad * grad + grad * std::abs(u) / bx);
    }
    qc[i] = b * v * ur + a * v * u + C * (v * v + ur * ur);
    lin[i] = 0.5 * (v * v + ur * ur);
    em[i] = lin[i] + u6 / 6.0;
  }
  const Region all = Region::all();
  bulk_.add(t, integrate_region(g, bulk, all));
  mink_.add(t, integrate_region(g, mink, all));
  err_.add(t, integrate_region(g, err, all));
  bound_.add(t, integrate_region(g, bound, all));
  forcing_.add(t, integrate_region(g, frc, all));
  const double elin = integrate_region(g, lin, all);
  if (elin > 0.0) {
    const double ratio = integrate_region(g, qc, all) / (2.0 * C * elin);
    a_.equivalence_min = std::min(a_.equivalence_min, ratio);
    a_.equivalence_max = std::max(a_.equivalence_max, ratio);
  }
  any_ = true;
  const int j = slot(t, a_.t1, a_.t2);
  if (j >= 0) {
    seen_[j] = true;
    a_.boundary[j] = -integrate_region(g, n0, all);
    a_.energy[j] = integrate_region(g, em, all);
  }
}

MultiplierAudit MultiplierObserver::result() const {
  if (!seen_[0] || !seen_[1]) throw AccuracyError("multiplier audit did not observe both interval ends");
  MultiplierAudit a = a_;
  a.bulk = bulk_.value();
  a.bulk_minkowski = mink_.value();
  a.err = err_.value();
  a.err_bound = bound_.value();
  a.forcing = forcing_.value();
  a.le1 = le1_.value();
  if (!any_ || !std::isfinite(a.equivalence_min)) a.equivalence_min = a.equivalence_max = 0.0;
  return a;
}

// ---------------------------------------------------------------------------
// Main estimate

double MainEstimateAudit::rhs() const {
  return (t1 + R + 1.0) / t2 * energy_inner + energy0 / std::pow(t2, gamma) +
         G_function(energy_outer + bracket(R) * le1);
}

MainEstimateObserver::MainEstimateObserver(double t1, double R, double t2, double gamma, int candidates)
    : le1_(gamma, t1, t2) {
  if (!(t1 > 1.0)) throw ParameterError("main estimate needs T1 > 1");
  if (!(R >= 0.0)) throw ParameterError("main estimate needs R >= 0");
  if (!(t2 > t1 + R)) throw ParameterError("main estimate needs T2 > T1 + R");
  if (candidates < 1) throw ParameterError("main estimate needs at least one candidate offset");
  a_.t1 = t1;
  a_.R = R;
  a_.t2 = t2;
  a_.gamma = gamma;
  for (int k = 0; k < candidates; ++k) {
    const double c = candidates == 1 ? R : R + static_cast<double>(k) / (candidates - 1);
    a_.candidates.push_back(c);
    cones_.emplace_back(ConeRegion{c, t1, t2}, [gamma](const PointValues& p) {
      return (p.v * p.v + p.ur * p.ur) / std::pow(bracket(p.r), 1.0 + gamma);
    });
  }
}

void MainEstimateObserver::observe(const StepView& view) {
  const FieldState& s = view.state;
  const double t = s.t;
  if (same_time(t, 0.0)) {
    std::vector<double> em(s.grid.n);
    for (int i = 0; i < s.grid.n; ++i) em[i] = -energy_J0(kFlat, s.u[i], s.v[i], view.ur[i]);
    a_.energy0 = integrate_region(s.grid, em, Region::all());
  }
  if (!in_interval(t, a_.t1, a_.t2)) return;
  const RadialGrid& g = s.grid;
  if (t + a_.R + 1.0 > g.last()) throw AccuracyError("main-estimate cones leave the grid");
  for (ConeIntegrator& c : cones_) c.observe(s);
  le1_.observe(view);
  const int j = slot(t, a_.t1, a_.t2);
  if (j == 0) {
    seen_[0] = true;
    std::vector<double> em(g.n);
    for (int i = 0; i < g.n; ++i) em[i] = -energy_J0(kFlat, s.u[i], s.v[i], view.ur[i]);
    a_.energy_inner = integrate_region(g, em, ball_on(g, a_.t1 + a_.R + 1.0));
    a_.energy_outer = integrate_region(g, em, exterior_on(g, a_.t1 + a_.R));
  } else if (j == 1) {
    seen_[1] = true;
    std::vector<double> sx(g.n);
    for (int i = 0; i < g.n; ++i) sx[i] = sixth(s.u[i]);
    a_.lhs = integrate_region(g, sx, Region::all());
  }
}

MainEstimateAudit MainEstimateObserver::result() const {
  if (!seen_[0] || !seen_[1]) throw AccuracyError("main-estimate audit did not observe T1 and T2");
  MainEstimateAudit a = a_;
  a.le1 = le1_.value();
  a.lateral.clear();
  std::size_t best = 0;
  for (std::size_t k = 0; k < cones_.size(); ++k) {
    a.lateral.push_back(cones_[k].value());
    if (a.lateral[k] < a.lateral[best]) best = k;
  }
  a.c = a.candidates[best];
  a.lateral_min = a.lateral[best];
  return a;
}

// ---------------------------------------------------------------------------

LateralBounds lateral_null_bounds(const MetricField& metric, const ConeRegion& cone, double gamma, double R, int nt) {
  if (nt < 2) throw ParameterError("lateral bounds need at least two time samples");
  LateralBounds b;
  const std::array<Vec3, 2> dirs{Vec3{1.0, 0.0, 0.0}, Vec3{0.0, 0.6, 0.8}};
  for (int k = 0; k < nt; ++k) {
    const double t = cone.t1 + (cone.t2 - cone.t1) * k / (nt - 1);
    const double r = cone.radius(t);
    if (!(r > 0.0)) continue;
    for (const Vec3& d : dirs) {
      const Vec3 x{r * d[0], r * d[1], r * d[2]};
      const MetricSample s = metric.eval(t, x);
      const Mat4 m = minkowski();
      double h = 0.0;
      for (int a = 0; a < 4; ++a)
        for (int c = 0; c < 4; ++c) h = std::max(h, std::abs(s.g[a][c] - m[a][c]));
      const double hll = std::abs(null_contraction(metric, t, x));
      const double bx = bracket(r);
      b.null_bound = std::max(b.null_bound, hll * std::pow(bx, 1.0 + gamma) / bracket(R));
      b.size_bound = std::max(b.size_bound, h * std::pow(bx, 0.5 + gamma) / std::sqrt(bracket(R)));
      ++b.samples;
    }
  }
  const double eps = metric.params().epsilon;
  b.size_bound_over_eps = eps > 0.0 ? b.size_bound / eps : 0.0;
  return b;
}

// ---------------------------------------------------------------------------
// Series

namespace {

std::string radius_label(double r) {
  std::ostringstream os;
  os << r;
  return os.str();
}

}  // namespace

DiagnosticSeries::DiagnosticSeries(Options opts)
    : opts_(std::move(opts)), le1_(opts_.gamma, 0.0, std::numeric_limits<double>::max()) {
  if (!(opts_.cadence > 0.0)) throw ParameterError("series cadence must be positive");
  columns_ = {{"t", "time"},
              {"E", "energy"},
              {"E_lin", "energy"},
              {"L6", "energy^(1/6)"},
              {"LE1", "energy*time"},
              {"Hdot1xL2", "energy^(1/2)"}};
  for (double r : opts_.ball_radii) columns_.push_back({"E_ball_" + radius_label(r), "energy"});
  for (double c : opts_.cone_offsets) {
    columns_.push_back({"flux_c" + radius_label(c), "energy"});
    columns_.push_back({"P_c" + radius_label(c), "energy*length"});
    fluxes_.emplace_back(ConeRegion{c, 0.0, std::numeric_limits<double>::max()}, flux_density);
  }
}

void DiagnosticSeries::observe(const StepView& view) {
  const FieldState& s = view.state;
  const RadialGrid& g = s.grid;
  le1_.observe(view);
  for (std::size_t k = 0; k < fluxes_.size(); ++k)
    if (fluxes_[k].cone().radius(s.t) <= g.last()) fluxes_[k].observe(s);

  const double q = s.t / opts_.cadence;
  if (std::abs(q - std::round(q)) > 1e-6) return;
  if (last_record_ >= 0.0 && same_time(s.t, last_record_)) return;
  last_record_ = s.t;

  std::vector<double> em(g.n), lin(g.n), sx(g.n);
  for (int i = 0; i < g.n; ++i) {
    lin[i] = 0.5 * (s.v[i] * s.v[i] + view.ur[i] * view.ur[i]);
    sx[i] = sixth(s.u[i]);
    em[i] = lin[i] + sx[i] / 6.0;
  }
  const double sextic = integrate_region(g, sx, Region::all());
  std::vector<double> row{s.t,
                          integrate_region(g, em, Region::all()),
                          integrate_region(g, lin, Region::all()),
                          std::pow(std::max(sextic, 0.0), 1.0 / 6.0),
                          le1_.value(),
                          std::sqrt(2.0 * std::max(integrate_region(g, lin, Region::all()), 0.0))};
  for (double r : opts_.ball_radii) row.push_back(integrate_region(g, em, ball_on(g, r)));
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k < fluxes_.size(); ++k) {
    const double c = fluxes_[k].cone().c;
    const bool inside = s.t + c <= g.last();
    row.push_back(inside ? fluxes_[k].partial() : nan);
    row.push_back(inside && s.t + c > 0.0 ? conformal_P(s, view.ur, c) : nan);
  }
  rows_.push_back(std::move(row));
}

std::vector<double> DiagnosticSeries::column(const std::string& name) const {
  for (std::size_t k = 0; k < columns_.size(); ++k)
    if (columns_[k].name == name) {
      std::vector<double> out;
      for (const auto& row : rows_) out.push_back(row[k]);
      return out;
    }
  throw ParameterError("no series column named '" + name + "'");
}

void DiagnosticSeries::write_rows(std::ostream& os, const std::vector<SeriesColumn>& columns,
                                  const std::vector<std::vector<double>>& rows) {
  for (std::size_t k = 0; k < columns.size(); ++k)
    os << (k ? "," : "") << columns[k].name << " [" << columns[k].unit << "]";
  os << '\n';
  os.imbue(std::locale::classic());
  os << std::setprecision(17);
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k) os << ',';
      if (std::isnan(row[k]))
        os << "nan";
      else
        os << row[k];
    }
    os << '\n';
  }
}

// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const LE1Parts& p) {
  j = {{"gradient", p.gradient}, {"potential", p.potential}, {"sextic", p.sextic}, {"total", p.total()}};
}

void to_json(nlohmann::json& j, const EnergyFluxAudit& a) {
  j = {{"cone", {{"c", a.cone.c}, {"t1", a.cone.t1}, {"t2", a.cone.t2}}},
       {"gamma", a.gamma},
       {"R", a.R},
       {"energy_interior", {a.energy_int[0], a.energy_int[1]}},
       {"energy_exterior", {a.energy_ext[0], a.energy_ext[1]}},
       {"slice_h_interior", {a.slice_h_int[0], a.slice_h_int[1]}},
       {"slice_h_exterior", {a.slice_h_ext[0], a.slice_h_ext[1]}},
       {"flux", a.flux},
       {"lateral_h", a.lateral_h},
       {"bulk_interior", a.bulk_int},
       {"bulk_exterior", a.bulk_ext},
       {"forcing_work_exterior", a.forcing_work_ext},
       {"metric_bulk_exterior", a.metric_bulk_ext},
       {"le1", a.le1},
       {"forcing_L1L2", a.forcing_l1l2},
       {"gradient_LinfL2", a.gradient_linf},
       {"energy0", a.energy0},
       {"interior_residual", a.interior_residual()},
       {"exterior_residual", a.exterior_residual()},
       {"ext_lhs", a.ext_lhs()},
       {"ext_rhs", a.ext_rhs()},
       {"ext_slack", a.ext_slack()}};
}

void to_json(nlohmann::json& j, const ConformalAudit& a) {
  j = {{"cone", {{"c", a.cone.c}, {"t1", a.cone.t1}, {"t2", a.cone.t2}}},
       {"gamma", a.gamma},
       {"R", a.R},
       {"P", {a.P[0], a.P[1]}},
       {"lateral_X", a.lateral_X},
       {"bulk", a.bulk},
       {"bulk_u6", a.bulk_u6},
       {"bulk_metric", a.bulk_metric},
       {"bulk_forcing", a.bulk_forcing},
       {"lateral_h", a.lateral_h},
       {"slice_h", {a.slice_h[0], a.slice_h[1]}},
       {"slice_h_inner_half", {a.slice_h_int[0], a.slice_h_int[1]}},
       {"slice_h_outer_half", {a.slice_h_ext[0], a.slice_h_ext[1]}},
       {"flux", a.flux},
       {"le1", a.le1},
       {"residual", a.residual()},
       {"int_lhs", a.int_lhs()},
       {"int_rhs", a.int_rhs()}};
}

void to_json(nlohmann::json& j, const MultiplierAudit& a) {
  j = {{"gamma", a.gamma},
       {"C", a.C},
       {"t1", a.t1},
       {"t2", a.t2},
       {"boundary", {a.boundary[0], a.boundary[1]}},
       {"bulk", a.bulk},
       {"bulk_minkowski", a.bulk_minkowski},
       {"err", a.err},
       {"err_bound", a.err_bound},
       {"forcing", a.forcing},
       {"energy", {a.energy[0], a.energy[1]}},
       {"le1", a.le1},
       {"K", a.K()},
       {"equivalence", {a.equivalence_min, a.equivalence_max}},
       {"residual", a.residual()}};
}

void to_json(nlohmann::json& j, const MainEstimateAudit& a) {
  j = {{"t1", a.t1},
       {"R", a.R},
       {"t2", a.t2},
       {"gamma", a.gamma},
       {"c", a.c},
       {"lhs", a.lhs},
       {"rhs", a.rhs()},
       {"ratio", a.ratio()},
       {"energy_inner", a.energy_inner},
       {"energy_outer", a.energy_outer},
       {"energy0", a.energy0},
       {"le1", a.le1},
       {"lateral_min", a.lateral_min},
       {"averaging_holds", a.averaging_holds()},
       {"candidates", a.candidates},
       {"lateral", a.lateral}};
}

void to_json(nlohmann::json& j, const LateralBounds& b) {
  j = {{"null_bound", b.null_bound},
       {"size_bound", b.size_bound},
       {"size_bound_over_eps", b.size_bound_over_eps},
       {"samples", b.samples}};
}

}  // namespace qwave
