#include "qwave/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qwave/errors.hpp"

namespace qwave {

std::string to_string(OperatorMode mode) { return mode == OperatorMode::Geometric ? "geometric" : "divergence"; }

OperatorMode operator_mode_from_string(const std::string& name) {
  if (name == "divergence" || name == "P") return OperatorMode::Divergence;
  if (name == "geometric" || name == "box_g") return OperatorMode::Geometric;
  throw ParameterError("unknown operator mode '" + name + "' (expected divergence or geometric)");
}

OperatorCoefficients operator_coefficients(const RadialCoefficients& c, OperatorMode mode) {
  OperatorCoefficients k;
  k.g00 = c.g00;
  if (mode == OperatorMode::Divergence) {
    k.G00 = c.g00, k.G0r = c.g0r, k.Grr = c.grr;
    k.G00_t = c.g00_t, k.G0r_t = c.g0r_t, k.Grr_t = c.grr_t;
    k.G00_r = c.g00_r, k.G0r_r = c.g0r_r, k.Grr_r = c.grr_r;
    return k;
  }
  const double q = c.g00 * c.grr - c.g0r * c.g0r;
  const double det = q * c.gT * c.gT;
  const double det_t = (c.g00_t * c.grr + c.g00 * c.grr_t - 2.0 * c.g0r * c.g0r_t) * c.gT * c.gT +
                       2.0 * q * c.gT * c.gT_t;
  const double det_r = (c.g00_r * c.grr + c.g00 * c.grr_r - 2.0 * c.g0r * c.g0r_r) * c.gT * c.gT +
                       2.0 * q * c.gT * c.gT_r;
  if (det == 0.0) throw SolverError("degenerate metric: det g^{ab} = 0");
  k.s = std::sqrt(std::abs(det));
  k.s_t = k.s * det_t / (2.0 * det);
  k.s_r = k.s * det_r / (2.0 * det);
  k.G00 = k.s * c.g00, k.G0r = k.s * c.g0r, k.Grr = k.s * c.grr;
  k.G00_t = k.s_t * c.g00 + k.s * c.g00_t;
  k.G0r_t = k.s_t * c.g0r + k.s * c.g0r_t;
  k.Grr_t = k.s_t * c.grr + k.s * c.grr_t;
  k.G00_r = k.s_r * c.g00 + k.s * c.g00_r;
  k.G0r_r = k.s_r * c.g0r + k.s * c.g0r_r;
  k.Grr_r = k.s_r * c.grr + k.s * c.grr_r;
  return k;
}

double max_characteristic_speed(const MetricField& metric, double r_max, double t0, double t1) {
  if (!(r_max > 0.0)) throw ParameterError("r_max must be positive");
  const int nr = 2048;
  const int nt = metric.is_static() ? 1 : 65;
  const double lo = std::min(t0, t1), hi = std::max(t0, t1);
  double c = 0.0;
  for (int k = 0; k < nt; ++k) {
    const double t = nt == 1 ? lo : lo + (hi - lo) * k / (nt - 1);
    for (int i = 0; i <= nr; ++i) c = std::max(c, characteristic_speed(metric.radial(t, r_max * i / nr)));
  }
  return c;
}

double time_step(double dr, double c_max, double cfl) {
  if (!(dr > 0.0)) throw ParameterError("dr must be positive");
  if (!(cfl > 0.0) || cfl >= 1.0) throw ParameterError("CFL fraction must lie in (0, 1)");
  if (!(c_max > 0.0) || !std::isfinite(c_max)) throw ParameterError("characteristic speed must be positive");
  long m = static_cast<long>(std::ceil(c_max / (cfl * dr) - 1e-9));
  m = ((m + 3) / 4) * 4;
  return 1.0 / static_cast<double>(m);
}

RadialGrid size_grid(double dr, double data_radius, double c_max, double t_final, double margin) {
  const double pad = std::max(margin, 5.0 * dr);
  return RadialGrid::covering(dr, data_radius + c_max * std::abs(t_final) + pad);
}

Solver::Solver(RadialGrid grid, MetricPtr metric, EvolutionSpec spec, double t0, double t1)
    : grid_(grid), metric_(std::move(metric)), spec_(std::move(spec)) {
  if (!metric_) throw ParameterError("solver needs a metric");
  if (grid_.n < 8) throw ParameterError("grid needs at least 8 points");
  c_max_ = max_characteristic_speed(*metric_, grid_.r_max(), t0, t1);
  dt_ = time_step(grid_.dr, c_max_, spec_.cfl);
  volume_ = grid_.cell_volumes();

  velocity_free_ = metric_->is_static();
  if (velocity_free_) {
    const Level& lv = level(t0);
    for (const OperatorCoefficients& k : lv.node)
      if (k.G0r != 0.0) velocity_free_ = false;
  }
}

void Solver::fill_level(Level& lv, double t) const {
  const int n = grid_.n;
  const double dr = grid_.dr;
  const bool reuse = lv.valid && metric_->is_static() && static_cast<int>(lv.node.size()) == n;
  if (!reuse) {
    lv.node.resize(n);
    lv.raw.resize(n);
    lv.half_rr.resize(n);
    for (int i = 0; i < n; ++i) {
      const RadialCoefficients c = metric_->radial(t, grid_.r(i));
      if (!(std::abs(c.g00) >= 0.5)) {
        std::ostringstream msg;
        msg << "|g^00| < 1/2 at t=" << t << " r=" << grid_.r(i);
        throw SolverError(msg.str());
      }
      if (characteristic_speed(c) * dt_ > spec_.cfl * dr * (1.0 + 1e-9)) {
        std::ostringstream msg;
        msg << "CFL violated at t=" << t << " r=" << grid_.r(i);
        throw SolverError(msg.str());
      }
      lv.raw[i] = c;
      lv.node[i] = operator_coefficients(c, spec_.mode);
      const double rh = (i + 0.5) * dr;
      lv.half_rr[i] = rh * rh * operator_coefficients(metric_->radial(t, rh), spec_.mode).Grr;
    }
  }
  lv.forcing.assign(n, 0.0);
  if (spec_.forcing)
    for (int i = 0; i < n; ++i) lv.forcing[i] = spec_.forcing(t, grid_.r(i));
  lv.t = t;
  lv.valid = true;
}

const Solver::Level& Solver::level(double t) const {
  // Static metrics without forcing: one level serves every time.
  if (metric_->is_static() && !spec_.forcing) {
    if (!cache_[0].valid) fill_level(cache_[0], t);
    cache_[0].t = t;
    return cache_[0];
  }
  const double tol = 1e-12 * std::max(1.0, std::abs(t));
  for (Level& lv : cache_)
    if (lv.valid && std::abs(lv.t - t) <= tol) return lv;
  Level& lv = cache_[next_];
  next_ = 1 - next_;
  fill_level(lv, t);
  return lv;
}

const std::vector<OperatorCoefficients>& Solver::node_coefficients(double t) const { return level(t).node; }

const std::vector<RadialCoefficients>& Solver::node_metric(double t) const { return level(t).raw; }

std::vector<double> Solver::forcing_at(double t) const { return level(t).forcing; }

void Solver::accelerate(const Level& lv, std::span<const double> u, std::span<const double> v,
                        std::vector<double>& out) const {
  const int n = grid_.n;
  const double dr = grid_.dr;
  out.resize(n);
  const auto at = [n](std::span<const double> f, int i) { return i < 0 ? f[-i] : (i < n ? f[i] : 0.0); };
  bool mixed = false;
  for (const OperatorCoefficients& k : lv.node)
    if (k.G0r != 0.0 || k.G0r_t != 0.0) {
      mixed = true;
      break;
    }
  for (int i = 0; i < n; ++i) {
    const OperatorCoefficients& k = lv.node[i];
    const double flux_out = lv.half_rr[i] * (at(u, i + 1) - u[i]);
    const double flux_in = i == 0 ? 0.0 : lv.half_rr[i - 1] * (u[i] - u[i - 1]);
    const double lap = (flux_out - flux_in) / (dr * volume_[i]);
    const double u2 = u[i] * u[i];
    double rhs = k.s * ((spec_.nonlinear ? u2 * u2 * u[i] : 0.0) + lv.forcing[i]);
    rhs -= k.G00_t * v[i] + lap;
    if (mixed) {
      const double ur = i == 0 ? 0.0 : (at(u, i + 1) - at(u, i - 1)) / (2.0 * dr);
      const double vr = i == 0 ? 0.0 : (at(v, i + 1) - at(v, i - 1)) / (2.0 * dr);
      double div_mixed;  // r^{-2} d_r (r^2 G0r v)
      if (i == 0) {
        div_mixed = 3.0 * lv.node[1].G0r * v[1] / dr;
      } else {
        const double gp = i + 1 < n ? lv.node[i + 1].G0r * v[i + 1] : 0.0;
        const double gm = lv.node[i - 1].G0r * v[i - 1];
        div_mixed = (gp - gm) / (2.0 * dr) + 2.0 * k.G0r * v[i] / grid_.r(i);
      }
      rhs -= k.G0r_t * ur + k.G0r * vr + div_mixed;
    }
    out[i] = rhs / k.G00;
  }
}

std::vector<double> Solver::acceleration(const FieldState& state) const {
  std::vector<double> a;
  accelerate(level(state.t), state.u, state.v, a);
  return a;
}

FieldState Solver::step(const FieldState& s, double h) const {
  if (!(s.grid == grid_)) throw DomainError("state grid does not match the solver grid");
  if (std::abs(std::abs(h) - dt_) > 1e-12 * dt_) throw SolverError("step size must equal the CFL time step");
  const int n = grid_.n;
  std::vector<double> a;
  accelerate(level(s.t), s.u, s.v, a);
  FieldState out;
  out.grid = grid_;
  out.t = s.t + h;
  out.u.resize(n);
  out.v.resize(n);
  std::vector<double> vh(n);
  for (int i = 0; i < n; ++i) {
    vh[i] = s.v[i] + 0.5 * h * a[i];
    out.u[i] = s.u[i] + h * vh[i];
  }
  const Level& next = level(out.t);
  if (velocity_free_) {
    accelerate(next, out.u, vh, a);
    for (int i = 0; i < n; ++i) out.v[i] = vh[i] + 0.5 * h * a[i];
    return out;
  }
  // Predictor then one fixed-point correction for the v-dependent terms.
  accelerate(next, out.u, vh, a);
  for (int i = 0; i < n; ++i) out.v[i] = vh[i] + 0.5 * h * a[i];
  accelerate(next, out.u, out.v, a);
  for (int i = 0; i < n; ++i) out.v[i] = vh[i] + 0.5 * h * a[i];
  return out;
}

long steps_to(double t, double dt) {
  const double q = t / dt;
  const long k = std::lround(q);
  if (std::abs(q - static_cast<double>(k)) > 1e-6) {
    std::ostringstream msg;
    msg << "time " << t << " is not a multiple of the step " << dt;
    throw ParameterError(msg.str());
  }
  return k;
}

namespace {

void notify(std::span<Observer* const> observers, const Solver& solver, const FieldState& s, long step) {
  if (observers.empty()) return;
  const std::vector<double> ur = radial_gradient(s.grid, s.u, 2);
  const std::vector<OperatorCoefficients>& coef = solver.node_coefficients(s.t);
  const std::vector<RadialCoefficients>& raw = solver.node_metric(s.t);
  const std::vector<double> f = solver.forcing_at(s.t);
  const StepView view{s, ur, coef, f, raw, &solver.metric(), solver.spec().mode, solver.dt(), step};
  for (Observer* o : observers) o->observe(view);
}

void check_or_dump(const FieldState& s, const FieldState& last_good, const EvolveOptions& options) {
  try {
    s.check_finite();
  } catch (const SolverError&) {
    if (options.dump_path) write_snapshot(*options.dump_path, last_good);
    throw;
  }
}

}  // namespace

EvolveResult evolve(const FieldState& initial, const EvolutionSpec& spec, MetricPtr metric, double t_final,
                    std::span<Observer* const> observers, const EvolveOptions& options) {
  initial.check_finite();
  const double t0 = initial.t;
  Solver solver(initial.grid, std::move(metric), spec, t0, t_final);
  const double dt = solver.dt();
  const double sign = t_final >= t0 ? 1.0 : -1.0;
  const long n_steps = steps_to(std::abs(t_final - t0), dt);

  std::vector<long> snap_steps;
  for (double ts : options.snapshot_times) {
    const long k = steps_to(sign * (ts - t0), dt);
    if (k < 0 || k > n_steps) throw ParameterError("snapshot time outside the evolution interval");
    snap_steps.push_back(k);
  }

  EvolveResult res;
  res.dt = dt;
  res.c_max = solver.c_max();
  res.snapshots.resize(snap_steps.size());
  const auto capture = [&](const FieldState& s, long k) {
    for (std::size_t j = 0; j < snap_steps.size(); ++j)
      if (snap_steps[j] == k) res.snapshots[j] = s;
  };

  FieldState s = initial;
  notify(observers, solver, s, 0);
  capture(s, 0);
  for (long k = 1; k <= n_steps; ++k) {
    FieldState next = solver.step(s, sign * dt);
    next.t = t0 + sign * static_cast<double>(k) * dt;
    check_or_dump(next, s, options);
    s = std::move(next);
    notify(observers, solver, s, k);
    capture(s, k);
  }
  res.final_state = std::move(s);
  res.steps = n_steps;
  return res;
}

FieldState linear_evolve(const FieldState& data, MetricPtr metric, double t_final, OperatorMode mode, double cfl) {
  EvolutionSpec spec;
  spec.mode = mode;
  spec.nonlinear = false;
  spec.cfl = cfl;
  if (t_final == data.t) return data;
  return evolve(data, spec, std::move(metric), t_final).final_state;
}

FieldState backward_linear(const FieldState& data, MetricPtr metric, OperatorMode mode, double cfl) {
  return linear_evolve(data, std::move(metric), 0.0, mode, cfl);
}

DuhamelReport duhamel_residual(std::span<const FieldState> snapshots, MetricPtr metric, const EvolutionSpec& spec,
                               int budget) {
  if (snapshots.empty()) throw ParameterError("duhamel_residual needs snapshots");
  if (budget < 1) throw ParameterError("duhamel budget must be positive");
  DuhamelReport rep;
  rep.budget = budget;
  const RadialGrid& grid = snapshots.front().grid;
  Solver solver(grid, metric, spec, snapshots.front().t, snapshots.back().t);
  EvolutionSpec lin = spec;
  lin.nonlinear = false;
  lin.forcing = nullptr;

  // Source impulse f(s) = s (u^5 + F) / G^00 at a snapshot.
  const auto source = [&](const FieldState& st) {
    const std::vector<OperatorCoefficients>& k = solver.node_coefficients(st.t);
    const std::vector<double> f = solver.forcing_at(st.t);
    std::vector<double> out(grid.n);
    for (int i = 0; i < grid.n; ++i) {
      const double u2 = st.u[i] * st.u[i];
      out[i] = k[i].s * ((spec.nonlinear ? u2 * u2 * st.u[i] : 0.0) + f[i]) / k[i].G00;
    }
    return out;
  };

  // y = S(s_k, 0) u[0] + sum_{j<k} w_j S(s_k, s_j)(0, f_j), trapezoid weights w_0 = h/2, w_j = h.
  FieldState y = snapshots.front();
  for (std::size_t k = 0; k < snapshots.size(); ++k) {
    const FieldState& uk = snapshots[k];
    if (!(uk.grid == grid)) throw DomainError("Duhamel snapshots must share one grid");
    if (rep.source_samples >= budget) {
      rep.partial = true;
      break;
    }
    const std::vector<double> f = source(uk);
    ++rep.source_samples;
    const double h_prev = k > 0 ? uk.t - snapshots[k - 1].t : 0.0;
    FieldState d = y;
    for (int i = 0; i < grid.n; ++i) d.v[i] += 0.5 * h_prev * f[i];
    rep.points.push_back({uk.t, energy_defect(uk, d), energy_defect(uk, FieldState::zeros(grid, uk.t))});
    if (k + 1 == snapshots.size()) break;
    const double h_next = snapshots[k + 1].t - uk.t;
    const double w = k == 0 ? 0.5 * h_next : 0.5 * (h_prev + h_next);
    for (int i = 0; i < grid.n; ++i) y.v[i] += w * f[i];
    y = evolve(y, lin, metric, snapshots[k + 1].t).final_state;
  }
  return rep;
}

}  // namespace qwave
