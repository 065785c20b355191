#include "qwave/initial_data.hpp"

#include <cmath>

#include "qwave/errors.hpp"

namespace qwave {

namespace {

// exp(-x^2 / w^2) reaches 1e-16 at x = w sqrt(ln 1e16) ~ 6.07 w.
constexpr double kGaussianReach = 6.1;

struct Gauss {
  double f, df, d2f, d3f;
};

// A exp(-(s - c)^2 / w^2) and derivatives.
Gauss gaussian(double a, double c, double w, double s) {
  const double x = (s - c) / w;
  const double f = a * std::exp(-x * x);
  return {f, -2.0 * x / w * f, (4.0 * x * x - 2.0) / (w * w) * f, (-8.0 * x * x * x + 12.0 * x) / (w * w * w) * f};
}

void check(const DataSpec& s) {
  if (!std::isfinite(s.amplitude)) throw ParameterError("data amplitude must be finite");
  if (s.kind != DataKind::Zero && !(s.width > 0.0)) throw ParameterError("data width must be positive");
  if (!std::isfinite(s.center)) throw ParameterError("data center must be finite");
  if (s.kind == DataKind::OutgoingPulse && !(s.center > s.width))
    throw ParameterError("outgoing pulse needs center > width (support away from the origin)");
  if (s.kind == DataKind::Bump && !(s.center >= 0.0)) throw ParameterError("bump center must be >= 0");
}

}  // namespace

std::string to_string(DataKind kind) {
  switch (kind) {
    case DataKind::Zero: return "zero";
    case DataKind::Gaussian: return "gaussian";
    case DataKind::DAlembert: return "dalembert";
    case DataKind::OutgoingPulse: return "outgoing";
    case DataKind::Bump: return "bump";
    case DataKind::Manufactured: return "manufactured";
  }
  return "zero";
}

DataKind data_kind_from_string(const std::string& name) {
  for (DataKind k : {DataKind::Zero, DataKind::Gaussian, DataKind::DAlembert, DataKind::OutgoingPulse, DataKind::Bump,
                     DataKind::Manufactured})
    if (to_string(k) == name) return k;
  throw ParameterError("unknown initial data kind '" + name + "'");
}

double data_radius(const DataSpec& s) {
  check(s);
  switch (s.kind) {
    case DataKind::Zero: return 0.0;
    case DataKind::Gaussian:
    case DataKind::DAlembert: return std::abs(s.center) + kGaussianReach * s.width;
    case DataKind::OutgoingPulse:
    case DataKind::Bump: return s.center + s.width;
    case DataKind::Manufactured: return kGaussianReach * s.width;
  }
  return 0.0;
}

BumpValue smooth_bump(double x) {
  if (std::abs(x) >= 1.0) return {};
  const double q = 1.0 - x * x;
  const double f = std::exp(1.0 - 1.0 / q);
  const double df = f * (-2.0 * x / (q * q));
  const double d2f = f * (4.0 * x * x / (q * q * q * q) - 2.0 / (q * q) - 8.0 * x * x / (q * q * q));
  return {f, df, d2f};
}

bool has_exact_solution(const DataSpec& s) {
  return s.kind == DataKind::Zero || s.kind == DataKind::DAlembert || s.kind == DataKind::OutgoingPulse ||
         s.kind == DataKind::Manufactured;
}

ExactValue exact_solution(const DataSpec& s, double t, double r) {
  check(s);
  if (!(r >= 0.0)) throw DomainError("exact_solution needs r >= 0");
  switch (s.kind) {
    case DataKind::Zero: return {};
    case DataKind::DAlembert: {
      if (r < 1e-6) {
        // Limit of the odd difference quotient at the origin.
        const Gauss g = gaussian(s.amplitude, s.center, s.width, -t);
        return {2.0 * g.df, -2.0 * g.d2f};
      }
      const Gauss p = gaussian(s.amplitude, s.center, s.width, r - t);
      const Gauss m = gaussian(s.amplitude, s.center, s.width, -r - t);
      return {(p.f - m.f) / r, (-p.df + m.df) / r};
    }
    case DataKind::OutgoingPulse: {
      if (r == 0.0) return {};
      const BumpValue b = smooth_bump((r - t - s.center) / s.width);
      return {s.amplitude * b.f / r, -s.amplitude * b.df / (s.width * r)};
    }
    case DataKind::Manufactured: {
      const double g = s.amplitude * std::exp(-r * r / (s.width * s.width));
      return {g * std::cos(s.omega * t), -s.omega * g * std::sin(s.omega * t)};
    }
    default: break;
  }
  throw ParameterError("data kind '" + to_string(s.kind) + "' has no closed-form solution");
}

FieldState exact_state(const DataSpec& s, const RadialGrid& grid, double t) {
  FieldState st = FieldState::zeros(grid, t);
  for (int i = 0; i < grid.n; ++i) {
    const ExactValue e = exact_solution(s, t, grid.r(i));
    st.u[i] = e.u;
    st.v[i] = e.v;
  }
  return st;
}

FieldState make_initial_state(const DataSpec& s, const RadialGrid& grid, double t) {
  check(s);
  if (has_exact_solution(s)) return exact_state(s, grid, t);
  FieldState st = FieldState::zeros(grid, t);
  for (int i = 0; i < grid.n; ++i) {
    const double r = grid.r(i);
    st.u[i] = s.kind == DataKind::Gaussian ? gaussian(s.amplitude, s.center, s.width, r).f
                                           : s.amplitude * smooth_bump((r - s.center) / s.width).f;
  }
  return st;
}

Forcing manufactured_forcing(const DataSpec& s, MetricPtr metric, OperatorMode mode, bool nonlinear) {
  if (s.kind != DataKind::Manufactured) throw ParameterError("manufactured forcing needs manufactured data");
  check(s);
  if (!metric) throw ParameterError("manufactured forcing needs a metric");
  return [s, metric, mode, nonlinear](double t, double r) {
    const double w2 = s.width * s.width;
    const double g = s.amplitude * std::exp(-r * r / w2);
    const double gr = -2.0 * r / w2 * g;           // g'
    const double gr_over_r = -2.0 / w2 * g;        // g'/r, regular at 0
    const double grr = (4.0 * r * r / (w2 * w2) - 2.0 / w2) * g;
    const double c = std::cos(s.omega * t), ct = -s.omega * std::sin(s.omega * t), ctt = -s.omega * s.omega * c;
    const double w = g * c, wt = g * ct, wtt = g * ctt, wr = gr * c, wrr = grr * c, wtr = gr * ct;
    const OperatorCoefficients k = operator_coefficients(metric->radial(t, r), mode);
    // d_t(G00 w_t + G0r w_r) + r^{-2} d_r(r^2 (G0r w_t + Grr w_r))
    double pw = k.G00_t * wt + k.G00 * wtt + k.G0r_t * wr + 2.0 * k.G0r * wtr + k.G0r_r * wt + k.Grr_r * wr +
                k.Grr * wrr;
    pw += r > 0.0 ? 2.0 * k.G0r * wt / r : 2.0 * k.G0r_r * wt;
    pw += 2.0 * k.Grr * gr_over_r * c;
    const double w5 = nonlinear ? w * w * w * w * w : 0.0;
    return pw / k.s - w5;
  };
}

}  // namespace qwave
