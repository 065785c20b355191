#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace qwave {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kFourPi = 4.0 * kPi;

/// Uniform radial grid r_i = i dr, i = 0 .. n-1. The field is even at r = 0 and
/// vanishes at the Dirichlet boundary r = n dr = r_max().
struct RadialGrid {
  double dr = 0.01;
  int n = 0;

  double r(int i) const { return i * dr; }
  double r_max() const { return n * dr; }
  double last() const { return (n - 1) * dr; }

  /// Smallest grid with r_max() >= radius.
  static RadialGrid covering(double dr, double radius);

  /// Exact cell volumes int r^2 dr over [r_i - dr/2, r_i + dr/2] (the origin cell is [0, dr/2]).
  std::vector<double> cell_volumes() const;

  bool operator==(const RadialGrid& o) const { return dr == o.dr && n == o.n; }
};

/// Snapshot (u, d_t u) at time t.
struct FieldState {
  double t = 0.0;
  RadialGrid grid;
  std::vector<double> u;
  std::vector<double> v;

  static FieldState zeros(const RadialGrid& grid, double t = 0.0);
  /// Throws SolverError naming the first non-finite sample.
  void check_finite() const;
};

/// Forward light cone {|x| < t + c} over the interval [t1, t2]; lateral boundary |x| = t + c.
struct ConeRegion {
  double c = 0.0;
  double t1 = 0.0;
  double t2 = 1.0;

  double radius(double t) const { return t + c; }
  /// Throws ParameterError unless t1 < t2, c >= 0 and t2 + c + margin <= r_max.
  void validate(const RadialGrid& grid, double margin) const;
};

/// Finite-difference derivative fields with even reflection at the origin and odd
/// reflection about the Dirichlet boundary.
struct RadialDerivatives {
  std::vector<double> d1;         ///< d_r u
  std::vector<double> d2;         ///< d_r^2 u
  std::vector<double> laplacian;  ///< d_r^2 u + (2/r) d_r u, 3 d_r^2 u at r = 0
};

RadialDerivatives spatial_derivatives(const RadialGrid& grid, std::span<const double> u, int order = 2);

/// d_r u only (centered, 2nd or 4th order).
std::vector<double> radial_gradient(const RadialGrid& grid, std::span<const double> u, int order = 2);

/// Radial shells: ball {r < outer}, annulus {inner < r < outer} or all stored points.
struct Region {
  double inner = 0.0;
  double outer = -1.0;  ///< negative means the whole grid

  static Region ball(double radius) { return {0.0, radius}; }
  static Region annulus(double inner, double outer) { return {inner, outer}; }
  static Region all() { return {0.0, -1.0}; }
  static Region exterior(double inner) { return {inner, -1.0}; }
};

/// int_region f dx = int f 4 pi r^2 dr, trapezoid on the grid with linear
/// interpolation of f 4 pi r^2 at region edges. Throws DomainError if the region
/// leaves the grid.
double integrate_region(const RadialGrid& grid, std::span<const double> f, Region region);

/// Field values at an off-grid radius, cubic Lagrange interpolation.
struct PointValues {
  double t = 0, r = 0, u = 0, v = 0, ur = 0;
};

PointValues sample_at(const FieldState& state, double r);

using ConeIntegrand = std::function<double(const PointValues&)>;

/// Streaming lateral integral int_{L_c(I)} f dsigma / sqrt 2 = int_I f(t, t + c) 4 pi (t + c)^2 dt,
/// trapezoid over the observed time levels.
class ConeIntegrator {
 public:
  ConeIntegrator(ConeRegion cone, ConeIntegrand integrand);

  /// States must arrive in increasing time; those outside [t1, t2] are ignored.
  void observe(const FieldState& state);

  /// Throws AccuracyError unless the observed levels covered the full interval.
  double value() const;
  double partial() const { return sum_; }
  bool complete() const;
  const ConeRegion& cone() const { return cone_; }

 private:
  ConeRegion cone_;
  ConeIntegrand integrand_;
  double sum_ = 0.0;
  double last_t_ = 0.0;
  double last_q_ = 0.0;
  bool started_ = false;
};

double cone_integrate(std::span<const FieldState> states, const ConeRegion& cone, const ConeIntegrand& integrand);

struct EnergyNorms {
  double gradient_sq = 0.0;  ///< int |grad_x u|^2
  double velocity_sq = 0.0;  ///< int v^2
  double sextic = 0.0;       ///< int u^6
  double l6 = 0.0;           ///< (int u^6)^{1/6}
  double linear_energy = 0.0;  ///< (1/2) int v^2 + |grad_x u|^2
  double energy = 0.0;         ///< linear_energy + int u^6 / 6
};

EnergyNorms energy_norms(const FieldState& state, int order = 2);

/// ||(u_a - u_b, v_a - v_b)||_{Hdot^1 x L^2}. Throws DomainError on grid mismatch.
double energy_defect(const FieldState& a, const FieldState& b, int order = 2);

/// Pointwise (1/2)(v^2 + u_r^2) + u^6/6.
std::vector<double> energy_density(const FieldState& state, std::span<const double> ur);

/// E_K(t) over a radial region.
double region_energy(const FieldState& state, Region region, int order = 2);

/// Flat little-endian float64 snapshot: header (n, dr, t), then u[n], v[n]; JSON sidecar alongside.
void write_snapshot(const std::filesystem::path& path, const FieldState& state);
FieldState read_snapshot(const std::filesystem::path& path);

}  // namespace qwave
