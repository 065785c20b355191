#pragma once

#include <array>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "qwave/grid.hpp"
#include "qwave/metric.hpp"
#include "qwave/multipliers.hpp"
#include "qwave/solver.hpp"

namespace qwave {

/// G(theta) = theta + theta^{1/3}.
double G_function(double theta);

/// Running trapezoid int f dt over the levels passed to add().
class TimeTrapezoid {
 public:
  void add(double t, double f);
  double value() const { return sum_; }
  bool started() const { return started_; }
  double last_time() const { return last_t_; }

 private:
  double sum_ = 0.0, last_t_ = 0.0, last_f_ = 0.0;
  bool started_ = false;
};

/// Whether t lies in [t1, t2] up to rounding of the step times.
bool in_interval(double t, double t1, double t2);
bool same_time(double a, double b);

// ---------------------------------------------------------------------------
// LE^1 norm

struct LE1Parts {
  double gradient = 0.0;   ///< iint |grad_{t,x} u|^2 / <r>^{1+g}
  double potential = 0.0;  ///< iint u^2 / <r>^{3+g}
  double sextic = 0.0;     ///< iint u^6 / <r>
  double total() const { return gradient + potential + sextic; }
};

/// Spatial integrals of the three LE^1 densities at one time level.
LE1Parts le1_slice(const FieldState& state, std::span<const double> ur, double gamma);

/// Streaming ||u||^2_{LE^1[t1, t2]}, trapezoid in time over the observed levels.
class LE1Accumulator : public Observer {
 public:
  LE1Accumulator(double gamma, double t1, double t2);
  void observe(const StepView& view) override;
  const LE1Parts& parts() const { return parts_; }
  double value() const { return parts_.total(); }
  double last_time() const { return last_t_; }

 private:
  double gamma_, t1_, t2_;
  LE1Parts parts_, last_;
  double last_t_ = 0.0;
  bool started_ = false;
};

/// ||u||^2_{LE^1[t1, t2]} from stored states (v and d_r u from the states).
LE1Parts le1_accumulate(std::span<const FieldState> states, double gamma, double t1, double t2);

// ---------------------------------------------------------------------------
// Flux through the lateral boundary of a cone

/// (1/2)(Lu)^2 + u^6/6 with L = d_t + d_r (angular derivatives vanish for radial fields).
double flux_density(const PointValues& p);

class FluxAccumulator : public Observer {
 public:
  explicit FluxAccumulator(ConeRegion cone);
  void observe(const StepView& view) override;
  double value() const { return integrator_.value(); }
  double partial() const { return integrator_.partial(); }
  const ConeRegion& cone() const { return integrator_.cone(); }

 private:
  ConeIntegrator integrator_;
};

/// flux[t1, t2] through |x| = t + c from stored states (spacing must not exceed dr).
double flux(std::span<const FieldState> states, const ConeRegion& cone);

// ---------------------------------------------------------------------------
// Identity audits. Every audit keeps the raw terms so the identity can be re-summed
// and the residual reported alongside its parts.

/// Energy identity from the d_t u multiplier, on the interior D(T) and the exterior D(T)^c.
///   interior: E_D(T2) + S_D(T2) = E_D(T1) + S_D(T1) + flux + lateral_h - bulk_int
///   exterior: E_ext(T2) + S_ext(T2) + flux + lateral_h = E_ext(T1) + S_ext(T1) - bulk_ext
/// where S is the h-part of the conserved density, lateral_h the h-part of the lateral
/// density and bulk = iint (s F v - (1/2) d_t G du du - d_t s u^6/6) with the sign of the
/// divergence of the current.
struct EnergyFluxAudit {
  ConeRegion cone;
  double gamma = 0.1;
  double R = 0.0;  ///< offset scale used in <R>
  double energy_int[2]{}, energy_ext[2]{};  ///< Minkowski energies at T1, T2
  double slice_h_int[2]{}, slice_h_ext[2]{};
  double flux = 0.0;
  double lateral_h = 0.0;
  double bulk_int = 0.0, bulk_ext = 0.0;
  double forcing_work_ext = 0.0;     ///< iint_ext s F v
  double metric_bulk_ext = 0.0;      ///< iint_ext (1/2) d_t h du du  (+ d_t s u^6/6)
  double le1 = 0.0;
  double forcing_l1l2 = 0.0;         ///< int ||F||_{L^2} dt
  double gradient_linf = 0.0;        ///< sup_t ||grad u||_{L^2}
  double energy0 = 0.0;              ///< E at T1 over the whole grid

  double interior_residual() const;
  double exterior_residual() const;
  /// Both sides of the exterior inequality with unit constant.
  double ext_lhs() const;
  double ext_rhs() const;
  double ext_slack() const { return ext_rhs() - ext_lhs(); }
};

class EnergyFluxObserver : public Observer {
 public:
  EnergyFluxObserver(ConeRegion cone, double gamma);
  void observe(const StepView& view) override;
  EnergyFluxAudit result() const;

  EnergyFluxObserver(const EnergyFluxObserver&) = delete;
  EnergyFluxObserver& operator=(const EnergyFluxObserver&) = delete;

 private:
  const MetricField* field_ = nullptr;
  OperatorMode mode_ = OperatorMode::Divergence;
  EnergyFluxAudit a_;
  ConeIntegrator flux_, lateral_total_;
  TimeTrapezoid bulk_int_, bulk_ext_, work_ext_, metric_ext_, f_norm_;
  LE1Accumulator le1_;
  bool seen_[2]{};
};

/// Conformal identity from the multiplier Xu = (t+c) d_t u + r d_r u + u on the cone:
///   P(T2) = P(T1) + lateral_X - bulk + lateral_h + slice_h(T2) - slice_h(T1)
/// with P the Minkowski functional, lateral_X = int (t+c)(Xu/(t+c))^2 dsigma/sqrt2,
/// bulk = iint div K (u^6/3 and the metric and forcing terms), and the h-parts of the
/// slice and lateral densities.
struct ConformalAudit {
  ConeRegion cone;
  double gamma = 0.1;
  double R = 0.0;
  double P[2]{};
  double lateral_X = 0.0;
  double bulk = 0.0;
  double bulk_u6 = 0.0;        ///< iint s u^6 / 3
  double bulk_metric = 0.0;    ///< iint -(1/2)((X-1)G) du du - ((X-1)s) u^6/6
  double bulk_forcing = 0.0;   ///< iint s F Xu
  double lateral_h = 0.0;
  double slice_h[2]{};
  double slice_h_int[2]{}, slice_h_ext[2]{};  ///< split at |x| = (T+c)/2
  double u6_T2 = 0.0;          ///< int_{D(T2)} u^6
  double energy_D_T1 = 0.0;    ///< E_{|x| < T1 + c}(T1)
  double energy0 = 0.0;
  double flux = 0.0;
  double le1 = 0.0;
  double forcing_l1l2 = 0.0;
  double gradient_linf = 0.0;

  double residual() const;
  double int_lhs() const { return u6_T2; }
  /// Right side of the interior estimate with unit constant.
  double int_rhs() const;
};

class ConformalObserver : public Observer {
 public:
  ConformalObserver(ConeRegion cone, double gamma);
  void observe(const StepView& view) override;
  ConformalAudit result() const;

  ConformalObserver(const ConformalObserver&) = delete;
  ConformalObserver& operator=(const ConformalObserver&) = delete;

 private:
  const MetricField* field_ = nullptr;
  OperatorMode mode_ = OperatorMode::Divergence;
  ConformalAudit a_;
  ConeIntegrator lateral_X_, lateral_h_, flux_;
  TimeTrapezoid u6_, metric_, forcing_, f_norm_;
  LE1Accumulator le1_;
  bool seen_[2]{};
};

/// Minkowski P(T) on D(T) = {|x| < T + c}.
double conformal_P(const FieldState& state, std::span<const double> ur, double c);

/// Morawetz identity d/dt int N^0 = int bulk for Mu = a u + b d_r u + C d_t u on [T1, T2].
struct MultiplierAudit {
  double gamma = 0.1;
  double C = 0.0;
  double t1 = 0.0, t2 = 0.0;
  double boundary[2]{};        ///< -int N^0 at T1, T2
  double bulk = 0.0;           ///< iint bulk (sign: d/dt int N^0)
  double bulk_minkowski = 0.0; ///< iint of the Minkowski quadratic form + nonlinear weight
  double err = 0.0;            ///< iint |Err|, Err = bulk - Minkowski part - forcing part
  double err_bound = 0.0;      ///< iint (|h|/<x> + |dh|)(|grad u|^2 + |grad u||u|/<x>)
  double forcing = 0.0;        ///< iint s F Mu
  double energy[2]{};          ///< E(T1), E(T2)
  double le1 = 0.0;
  double equivalence_min = 0.0, equivalence_max = 0.0;  ///< Q_C / (2 C E^lin) over the levels

  /// int N^0 (T2) - int N^0 (T1) - iint bulk.
  double residual() const;
  /// (LE1 + E(T2)) / E(T1).
  double K() const;
};

class MultiplierObserver : public Observer {
 public:
  MultiplierObserver(const MultiplierProfile& profile, double t1, double t2);
  void observe(const StepView& view) override;
  MultiplierAudit result() const;

 private:
  MultiplierProfile profile_;
  std::vector<BWeight> b_;
  std::vector<AWeight> a_w_;
  int cached_n_ = -1;
  double cached_dr_ = 0.0;
  MultiplierAudit a_;
  TimeTrapezoid bulk_, mink_, err_, bound_, forcing_;
  LE1Accumulator le1_;
  bool seen_[2]{};
  bool any_ = false;
  void prepare(const RadialGrid& grid);
};

/// Main estimate: int u^6(T2) against
///   (T1+R+1)/T2 E_{|x|<T1+R+1}(T1) + E/T2^g + G(E_{|x|>T1+R}(T1) + <R> ||u||^2_{LE^1[T1,T2]})
/// with the cone offset c in [R, R+1] picked among equispaced candidates.
struct MainEstimateAudit {
  double t1 = 0.0, R = 0.0, t2 = 0.0, gamma = 0.1;
  double lhs = 0.0;
  double energy_inner = 0.0;  ///< E_{|x|<T1+R+1}(T1)
  double energy_outer = 0.0;  ///< E_{|x|>T1+R}(T1)
  double energy0 = 0.0;
  double le1 = 0.0;
  double c = 0.0;             ///< selected offset
  double lateral_min = 0.0;   ///< selected int_{L_c} |grad u|^2 / <x>^{1+g} dsigma/sqrt2
  std::vector<double> candidates, lateral;
  double rhs() const;
  double ratio() const { return rhs() > 0.0 ? lhs / rhs() : 0.0; }
  bool averaging_holds() const { return lateral_min <= le1; }
};

class MainEstimateObserver : public Observer {
 public:
  MainEstimateObserver(double t1, double R, double t2, double gamma, int candidates = 16);
  void observe(const StepView& view) override;
  MainEstimateAudit result() const;

 private:
  MainEstimateAudit a_;
  std::vector<ConeIntegrator> cones_;
  LE1Accumulator le1_;
  bool seen_[2]{};
};

/// Bounds near the cone used by the lateral estimates:
///   sup |h^{LbarLbar}| <x>^{1+g} / <R> and sup |h| <x>^{1/2+g} / <R>^{1/2} on L_c(I).
struct LateralBounds {
  double null_bound = 0.0;
  double size_bound = 0.0;
  double size_bound_over_eps = 0.0;  ///< size_bound / epsilon (0 when epsilon = 0)
  std::size_t samples = 0;
};
LateralBounds lateral_null_bounds(const MetricField& metric, const ConeRegion& cone, double gamma, double R,
                                  int nt = 401);

// ---------------------------------------------------------------------------
// Time series

struct SeriesColumn {
  std::string name;
  std::string unit;
};

/// Time-indexed diagnostics written as CSV: first column time, header row with units.
class DiagnosticSeries : public Observer {
 public:
  struct Options {
    double cadence = 0.5;                 ///< record when t is a multiple of cadence
    double gamma = 0.1;
    std::vector<double> ball_radii;       ///< E_K over |x| < radius
    std::vector<double> cone_offsets;     ///< running flux and P(t) from t = 0
  };
  explicit DiagnosticSeries(Options opts);
  void observe(const StepView& view) override;

  const std::vector<SeriesColumn>& columns() const { return columns_; }
  const std::vector<std::vector<double>>& rows() const { return rows_; }
  std::vector<double> column(const std::string& name) const;
  void write_csv(std::ostream& os) const { write_rows(os, columns_, rows_); }
  /// Header with units, then one row per record; LF line ends, '.' decimals.
  static void write_rows(std::ostream& os, const std::vector<SeriesColumn>& columns,
                         const std::vector<std::vector<double>>& rows);

 private:
  Options opts_;
  std::vector<SeriesColumn> columns_;
  std::vector<std::vector<double>> rows_;
  LE1Accumulator le1_;
  std::vector<ConeIntegrator> fluxes_;
  double last_record_ = -1.0;
};

void to_json(nlohmann::json& j, const LE1Parts& p);
void to_json(nlohmann::json& j, const EnergyFluxAudit& a);
void to_json(nlohmann::json& j, const ConformalAudit& a);
void to_json(nlohmann::json& j, const MultiplierAudit& a);
void to_json(nlohmann::json& j, const MainEstimateAudit& a);
void to_json(nlohmann::json& j, const LateralBounds& b);

}  // namespace qwave
