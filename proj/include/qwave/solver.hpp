#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qwave/grid.hpp"
#include "qwave/metric.hpp"

namespace qwave {

/// Divergence form P = d_a g^{ab} d_b, or the geometric operator
/// Box_g = |g|^{-1/2} d_a |g|^{1/2} g^{ab} d_b with |g| = |det g^{ab}|.
enum class OperatorMode { Divergence, Geometric };

std::string to_string(OperatorMode mode);
OperatorMode operator_mode_from_string(const std::string& name);

/// Coefficients of the radial operator written as d_a G^{ab} d_b u = s (u^5 + F).
/// Divergence mode: G = g, s = 1. Geometric mode: G = s g, s = sqrt|det g^{ab}|.
struct OperatorCoefficients {
  double G00 = -1.0, G0r = 0.0, Grr = 1.0, s = 1.0;
  double G00_t = 0.0, G0r_t = 0.0, Grr_t = 0.0, s_t = 0.0;
  double G00_r = 0.0, G0r_r = 0.0, Grr_r = 0.0, s_r = 0.0;
  double g00 = -1.0;  ///< raw g^{00}, for the division guard
};

OperatorCoefficients operator_coefficients(const RadialCoefficients& c, OperatorMode mode);

/// Forcing F(t, r); empty means F = 0.
using Forcing = std::function<double(double t, double r)>;

struct EvolutionSpec {
  OperatorMode mode = OperatorMode::Divergence;
  bool nonlinear = true;
  Forcing forcing;
  double cfl = 0.5;
};

/// Everything a diagnostic needs at one time level; valid only during the callback.
struct StepView {
  const FieldState& state;
  std::span<const double> ur;                       ///< centered d_r u
  std::span<const OperatorCoefficients> coefficients;  ///< at the grid nodes
  std::span<const double> forcing;                  ///< F at the grid nodes (zeros if none)
  std::span<const RadialCoefficients> metric;       ///< raw g^{ab} at the grid nodes
  const MetricField* field = nullptr;               ///< for off-grid evaluation
  OperatorMode mode = OperatorMode::Divergence;
  double dt = 0.0;
  long step = 0;
};

class Observer {
 public:
  virtual ~Observer() = default;
  virtual void observe(const StepView& view) = 0;
};

/// Largest characteristic speed over [t0, t1] x [0, r_max].
double max_characteristic_speed(const MetricField& metric, double r_max, double t0, double t1);

/// dt = 1/m with m the smallest multiple of 4 such that dt c_max / dr <= cfl.
double time_step(double dr, double c_max, double cfl);

/// Grid just large enough that nothing launched from r <= data_radius reaches the
/// boundary before T: r_max >= data_radius + c_max T + max(margin, 5 dr).
RadialGrid size_grid(double dr, double data_radius, double c_max, double t_final, double margin = 1.0);

/// Explicit kick-drift-kick integrator for the radial equation. The velocity
/// dependence through G^{0r} and d_t G is handled by a predictor value of v and
/// one fixed-point correction.
class Solver {
 public:
  /// The metric is scanned over [t0, t1] for the CFL bound.
  Solver(RadialGrid grid, MetricPtr metric, EvolutionSpec spec, double t0, double t1);

  double dt() const { return dt_; }
  double c_max() const { return c_max_; }
  const RadialGrid& grid() const { return grid_; }
  const EvolutionSpec& spec() const { return spec_; }
  const MetricField& metric() const { return *metric_; }

  /// One step of signed size h (|h| = dt forward or backward).
  FieldState step(const FieldState& state, double h) const;

  /// Coefficients and forcing on the nodes at time t (cached for static metrics).
  const std::vector<OperatorCoefficients>& node_coefficients(double t) const;
  const std::vector<RadialCoefficients>& node_metric(double t) const;
  std::vector<double> forcing_at(double t) const;

  /// d_t v for the given (u, v) at time t.
  std::vector<double> acceleration(const FieldState& state) const;

 private:
  struct Level {
    double t = 0.0;
    bool valid = false;
    std::vector<OperatorCoefficients> node;
    std::vector<RadialCoefficients> raw;
    std::vector<double> half_rr;  ///< r^2 G^{rr} at r_{i+1/2}
    std::vector<double> forcing;
  };
  const Level& level(double t) const;
  void fill_level(Level& lv, double t) const;
  void accelerate(const Level& lv, std::span<const double> u, std::span<const double> v, std::vector<double>& out) const;

  RadialGrid grid_;
  MetricPtr metric_;
  EvolutionSpec spec_;
  double dt_ = 0.0;
  double c_max_ = 1.0;
  bool velocity_free_ = false;  ///< acceleration independent of v
  std::vector<double> volume_;  ///< cell volumes int r^2 dr
  mutable Level cache_[2];
  mutable int next_ = 0;
};

struct EvolveOptions {
  /// States copied out at these times (must be step times).
  std::vector<double> snapshot_times;
  /// On non-finite values the last finite state is written here before throwing.
  std::optional<std::filesystem::path> dump_path;
};

struct EvolveResult {
  FieldState final_state;
  std::vector<FieldState> snapshots;  ///< in the order of snapshot_times
  long steps = 0;
  double dt = 0.0;
  double c_max = 0.0;
};

/// Number of steps of size dt that land on t (throws ParameterError if t is not a step time).
long steps_to(double t, double dt);

/// Evolves from initial.t to t_final (backward if t_final < initial.t), calling every
/// observer at the initial level and after each step.
EvolveResult evolve(const FieldState& initial, const EvolutionSpec& spec, MetricPtr metric, double t_final,
                    std::span<Observer* const> observers = {}, const EvolveOptions& options = {});

/// Linear evolution (nonlinearity and forcing off) from data at its own time back to t = 0.
FieldState backward_linear(const FieldState& data, MetricPtr metric, OperatorMode mode = OperatorMode::Divergence,
                           double cfl = 0.5);

/// Linear evolution of data to t_final in either direction.
FieldState linear_evolve(const FieldState& data, MetricPtr metric, double t_final,
                         OperatorMode mode = OperatorMode::Divergence, double cfl = 0.5);

struct DuhamelPoint {
  double t = 0.0;
  double residual = 0.0;  ///< ||u(t) - Duhamel(t)||_{Hdot^1 x L^2}
  double norm = 0.0;      ///< ||u(t)||_{Hdot^1 x L^2}
};

struct DuhamelReport {
  std::vector<DuhamelPoint> points;
  int source_samples = 0;  ///< linear sub-evolutions launched
  int budget = 0;
  bool partial = false;    ///< budget exhausted before the last point
};

/// Compares u(t) against S(t,0)u[0] + int_0^t S(t,s)(0, s (u^5 + F)/G^{00}) ds, trapezoid in s
/// over snapshots spaced by `cadence`. `snapshots` are the nonlinear run at s = k cadence.
DuhamelReport duhamel_residual(std::span<const FieldState> snapshots, MetricPtr metric, const EvolutionSpec& spec,
                               int budget = 32);

}  // namespace qwave
