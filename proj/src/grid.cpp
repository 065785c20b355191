#include "qwave/grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qwave/errors.hpp"

namespace qwave {

RadialGrid RadialGrid::covering(double dr, double radius) {
  if (!(dr > 0.0)) throw ParameterError("grid spacing dr must be positive");
  if (!(radius > 0.0)) throw ParameterError("grid radius must be positive");
  RadialGrid g;
  g.dr = dr;
  g.n = static_cast<int>(std::ceil(radius / dr - 1e-9));
  if (g.n < 8) g.n = 8;
  return g;
}

std::vector<double> RadialGrid::cell_volumes() const {
  std::vector<double> vol(n);
  vol[0] = dr * dr * dr / 24.0;
  for (int i = 1; i < n; ++i) vol[i] = r(i) * r(i) * dr + dr * dr * dr / 12.0;
  return vol;
}

FieldState FieldState::zeros(const RadialGrid& grid, double t) {
  FieldState s;
  s.t = t;
  s.grid = grid;
  s.u.assign(grid.n, 0.0);
  s.v.assign(grid.n, 0.0);
  return s;
}

void FieldState::check_finite() const {
  for (int i = 0; i < grid.n; ++i) {
    if (!std::isfinite(u[i]) || !std::isfinite(v[i])) {
      std::ostringstream msg;
      msg << "non-finite field at t=" << t << " r=" << grid.r(i) << " (u=" << u[i] << ", v=" << v[i] << ")";
      throw SolverError(msg.str());
    }
  }
}

void ConeRegion::validate(const RadialGrid& grid, double margin) const {
  if (!(c >= 0.0)) throw ParameterError("cone offset c must be non-negative");
  if (!(t1 < t2)) throw ParameterError("cone interval needs t1 < t2");
  if (t1 < 0.0) throw ParameterError("cone interval must start at t >= 0");
  if (t2 + c + margin > grid.last() + 1e-9)
    throw ParameterError("cone leaves the grid: t2 + c + margin exceeds r_max");
}

namespace {

// Even reflection at r = 0, odd reflection about the Dirichlet point r = n dr.
inline double ghost(std::span<const double> u, int i) {
  const int n = static_cast<int>(u.size());
  if (i < 0) i = -i;
  if (i < n) return u[i];
  if (i == n) return 0.0;
  const int j = 2 * n - i;
  return j >= 0 ? -u[j] : 0.0;
}

inline double d1_at(std::span<const double> u, int i, double dr, int order) {
  if (order == 4)
    return (-ghost(u, i + 2) + 8.0 * ghost(u, i + 1) - 8.0 * ghost(u, i - 1) + ghost(u, i - 2)) / (12.0 * dr);
  return (ghost(u, i + 1) - ghost(u, i - 1)) / (2.0 * dr);
}

inline double d2_at(std::span<const double> u, int i, double dr, int order) {
  if (order == 4)
    return (-ghost(u, i + 2) + 16.0 * ghost(u, i + 1) - 30.0 * ghost(u, i) + 16.0 * ghost(u, i - 1) -
            ghost(u, i - 2)) /
           (12.0 * dr * dr);
  return (ghost(u, i + 1) - 2.0 * ghost(u, i) + ghost(u, i - 1)) / (dr * dr);
}

void check_order(int order) {
  if (order != 2 && order != 4) throw ParameterError("stencil order must be 2 or 4");
}

// Integral of the piecewise-linear interpolant of g over [0, x].
double cumulative(std::span<const double> g, double dr, double x) {
  const int n = static_cast<int>(g.size());
  int k = static_cast<int>(std::floor(x / dr));
  k = std::clamp(k, 0, n - 1);
  double sum = 0.0;
  for (int i = 0; i < k; ++i) sum += 0.5 * dr * (g[i] + g[i + 1]);
  const double rem = x - k * dr;
  if (rem > 0.0 && k + 1 < n) {
    const double gx = g[k] + (g[k + 1] - g[k]) * rem / dr;
    sum += 0.5 * rem * (g[k] + gx);
  }
  return sum;
}

}  // namespace

RadialDerivatives spatial_derivatives(const RadialGrid& grid, std::span<const double> u, int order) {
  check_order(order);
  RadialDerivatives d;
  d.d1.resize(grid.n);
  d.d2.resize(grid.n);
  d.laplacian.resize(grid.n);
  for (int i = 0; i < grid.n; ++i) {
    d.d1[i] = i == 0 ? 0.0 : d1_at(u, i, grid.dr, order);
    d.d2[i] = d2_at(u, i, grid.dr, order);
    d.laplacian[i] = i == 0 ? 3.0 * d.d2[i] : d.d2[i] + 2.0 * d.d1[i] / grid.r(i);
  }
  return d;
}

std::vector<double> radial_gradient(const RadialGrid& grid, std::span<const double> u, int order) {
  check_order(order);
  std::vector<double> d(grid.n);
  d[0] = 0.0;
  for (int i = 1; i < grid.n; ++i) d[i] = d1_at(u, i, grid.dr, order);
  return d;
}

double integrate_region(const RadialGrid& grid, std::span<const double> f, Region region) {
  if (static_cast<int>(f.size()) != grid.n) throw DomainError("density size does not match the grid");
  const double hi = region.outer < 0.0 ? grid.last() : region.outer;
  const double lo = region.inner;
  const double tol = 1e-9 * grid.dr;
  if (lo < 0.0 || hi > grid.last() + tol) throw DomainError("region leaves the grid");
  if (hi <= lo) return 0.0;
  std::vector<double> g(grid.n);
  for (int i = 0; i < grid.n; ++i) g[i] = kFourPi * grid.r(i) * grid.r(i) * f[i];
  return cumulative(g, grid.dr, std::min(hi, grid.last())) - cumulative(g, grid.dr, lo);
}

PointValues sample_at(const FieldState& state, double r) {
  const RadialGrid& grid = state.grid;
  if (!(r >= 0.0) || r > grid.last()) throw DomainError("sample radius outside the grid");
  const int i0 = std::min(static_cast<int>(std::floor(r / grid.dr)), grid.n - 1);
  const double s = r / grid.dr - i0;  // in [0, 1]
  // Cubic Lagrange weights on nodes i0-1, i0, i0+1, i0+2.
  const double w[4] = {-s * (s - 1.0) * (s - 2.0) / 6.0, (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
                       -(s + 1.0) * s * (s - 2.0) / 2.0, (s + 1.0) * s * (s - 1.0) / 6.0};
  const std::span<const double> u(state.u), v(state.v);
  PointValues p;
  p.t = state.t;
  p.r = r;
  for (int k = 0; k < 4; ++k) {
    const int i = i0 - 1 + k;
    const double ur = (i == 0) ? 0.0 : (i < 0 ? -d1_at(u, -i, grid.dr, 2) : d1_at(u, i, grid.dr, 2));
    p.u += w[k] * ghost(u, i);
    p.v += w[k] * ghost(v, i);
    p.ur += w[k] * ur;
  }
  return p;
}

ConeIntegrator::ConeIntegrator(ConeRegion cone, ConeIntegrand integrand)
    : cone_(cone), integrand_(std::move(integrand)) {
  if (!(cone_.t1 < cone_.t2)) throw ParameterError("cone interval needs t1 < t2");
  if (!integrand_) throw ParameterError("cone integrand is empty");
}

void ConeIntegrator::observe(const FieldState& state) {
  const double dr = state.grid.dr;
  const double tol = 1e-9 * std::max(1.0, std::abs(state.t));
  if (state.t < cone_.t1 - tol || state.t > cone_.t2 + tol) return;
  if (started_ && state.t - last_t_ > dr * (1.0 + 1e-9))
    throw AccuracyError("snapshot spacing exceeds dr on the cone interval");
  if (!started_ && state.t > cone_.t1 + tol) throw AccuracyError("snapshots do not cover the cone interval start");
  const double rho = cone_.radius(state.t);
  const double q = kFourPi * rho * rho * integrand_(sample_at(state, rho));
  if (started_) sum_ += 0.5 * (state.t - last_t_) * (q + last_q_);
  started_ = true;
  last_t_ = state.t;
  last_q_ = q;
}

bool ConeIntegrator::complete() const {
  return started_ && last_t_ >= cone_.t2 - 1e-9 * std::max(1.0, std::abs(cone_.t2));
}

double ConeIntegrator::value() const {
  if (!complete()) throw AccuracyError("cone interval not fully observed");
  return sum_;
}

double cone_integrate(std::span<const FieldState> states, const ConeRegion& cone, const ConeIntegrand& integrand) {
  ConeIntegrator acc(cone, integrand);
  for (const FieldState& s : states) acc.observe(s);
  return acc.value();
}

std::vector<double> energy_density(const FieldState& state, std::span<const double> ur) {
  std::vector<double> e(state.grid.n);
  for (int i = 0; i < state.grid.n; ++i) {
    const double u2 = state.u[i] * state.u[i];
    e[i] = 0.5 * (state.v[i] * state.v[i] + ur[i] * ur[i]) + u2 * u2 * u2 / 6.0;
  }
  return e;
}

EnergyNorms energy_norms(const FieldState& state, int order) {
  const RadialGrid& g = state.grid;
  const std::vector<double> ur = radial_gradient(g, state.u, order);
  std::vector<double> grad(g.n), vel(g.n), sex(g.n);
  for (int i = 0; i < g.n; ++i) {
    grad[i] = ur[i] * ur[i];
    vel[i] = state.v[i] * state.v[i];
    const double u2 = state.u[i] * state.u[i];
    sex[i] = u2 * u2 * u2;
  }
  EnergyNorms n;
  n.gradient_sq = integrate_region(g, grad, Region::all());
  n.velocity_sq = integrate_region(g, vel, Region::all());
  n.sextic = integrate_region(g, sex, Region::all());
  n.l6 = std::pow(std::max(n.sextic, 0.0), 1.0 / 6.0);
  n.linear_energy = 0.5 * (n.gradient_sq + n.velocity_sq);
  n.energy = n.linear_energy + n.sextic / 6.0;
  return n;
}

double energy_defect(const FieldState& a, const FieldState& b, int order) {
  if (!(a.grid == b.grid)) throw DomainError("energy_defect needs states on the same grid");
  FieldState d = FieldState::zeros(a.grid, a.t);
  for (int i = 0; i < a.grid.n; ++i) {
    d.u[i] = a.u[i] - b.u[i];
    d.v[i] = a.v[i] - b.v[i];
  }
  const EnergyNorms n = energy_norms(d, order);
  return std::sqrt(n.gradient_sq + n.velocity_sq);
}

double region_energy(const FieldState& state, Region region, int order) {
  const std::vector<double> ur = radial_gradient(state.grid, state.u, order);
  return integrate_region(state.grid, energy_density(state, ur), region);
}

namespace {

void put_le(std::ostream& os, double x) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
  unsigned char bytes[8];
  for (int k = 0; k < 8; ++k) bytes[k] = static_cast<unsigned char>((bits >> (8 * k)) & 0xffu);
  os.write(reinterpret_cast<const char*>(bytes), 8);
}

double get_le(std::istream& is) {
  unsigned char bytes[8];
  if (!is.read(reinterpret_cast<char*>(bytes), 8)) throw ParameterError("truncated snapshot file");
  std::uint64_t bits = 0;
  for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(bytes[k]) << (8 * k);
  return std::bit_cast<double>(bits);
}

}  // namespace

void write_snapshot(const std::filesystem::path& path, const FieldState& state) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ParameterError("cannot open snapshot file " + path.string());
  put_le(os, static_cast<double>(state.grid.n));
  put_le(os, state.grid.dr);
  put_le(os, state.t);
  for (double x : state.u) put_le(os, x);
  for (double x : state.v) put_le(os, x);

  nlohmann::json side{{"format", "radial-snapshot"},
                      {"encoding", "float64 little-endian"},
                      {"layout", {"n", "dr", "t", "u[n]", "v[n]"}},
                      {"n", state.grid.n},
                      {"dr", state.grid.dr},
                      {"t", state.t},
                      {"r_max", state.grid.r_max()}};
  std::filesystem::path meta = path;
  meta += ".json";
  std::ofstream ms(meta);
  ms << side.dump(2) << '\n';
}

FieldState read_snapshot(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParameterError("cannot open snapshot file " + path.string());
  const double n = get_le(is);
  FieldState s;
  s.grid.n = static_cast<int>(n);
  s.grid.dr = get_le(is);
  s.t = get_le(is);
  if (s.grid.n < 1 || static_cast<double>(s.grid.n) != n || !(s.grid.dr > 0.0))
    throw ParameterError("corrupt snapshot header in " + path.string());
  s.u.resize(s.grid.n);
  s.v.resize(s.grid.n);
  for (double& x : s.u) x = get_le(is);
  for (double& x : s.v) x = get_le(is);
  return s;
}

}  // namespace qwave
