#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "qwave/grid.hpp"
#include "qwave/initial_data.hpp"
#include "qwave/metric.hpp"
#include "qwave/solver.hpp"

namespace qwave {

struct MetricConfig {
  std::string family = "minkowski";
  MetricParams params;
  bool operator==(const MetricConfig&) const;
};

struct GridConfig {
  double dr = 0.0;      ///< required
  double r_max = 0.0;   ///< 0 selects finite-speed auto-sizing
  double margin = 4.0;  ///< extra radius beyond data_radius + c_max T (auto-sizing only)
  bool operator==(const GridConfig&) const = default;
};

struct EvolutionConfig {
  OperatorMode mode = OperatorMode::Divergence;
  bool nonlinear = true;
  double cfl = 0.5;
  double t_final = 0.0;             ///< required
  std::string forcing = "none";     ///< "none" or "manufactured"
  bool operator==(const EvolutionConfig&) const = default;
};

struct DiagnosticsConfig {
  double cadence = 0.5;
  double gamma = 0.1;
  std::vector<double> ball_radii{1.0, 5.0};
  std::vector<double> cone_offsets{2.0};
  std::vector<double> snapshot_times;  ///< written as binary snapshots
  bool operator==(const DiagnosticsConfig&) const = default;
};

struct AuditSelection {
  bool energy_flux = true;
  bool conformal = true;
  bool multiplier = true;
  bool main_estimate = false;
  bool lateral_bounds = true;
  bool duhamel = false;
  bool operator==(const AuditSelection&) const = default;
};

struct MultiplierConfig {
  double gamma = 0.1;
  int terms = 200;
  double C = 0.0;  ///< <= 0 selects the default
  double t1 = 0.0;
  double t2 = 0.0;  ///< 0 means t_final
  bool operator==(const MultiplierConfig&) const = default;
};

struct MainEstimateConfig {
  double t1 = 5.0;
  double R = 5.0;
  double t2 = 40.0;
  int candidates = 16;
  bool operator==(const MainEstimateConfig&) const = default;
};

struct ScatteringConfig {
  std::vector<double> times{10.0, 20.0, 40.0, 80.0};
  bool operator==(const ScatteringConfig&) const = default;
};

/// Thresholds applied only under --assert.
struct AssertConfig {
  double energy_drift = 1e-2;       ///< static metric, no forcing
  double identity_residual = 1e-2;  ///< |residual| / scale of the identity
  double exact_error = 1e-2;        ///< relative L2 error against the closed form, when available
  bool operator==(const AssertConfig&) const = default;
};

struct ExperimentConfig {
  std::string name = "experiment";
  MetricConfig metric;
  DataSpec data;
  GridConfig grid;
  EvolutionConfig evolution;
  DiagnosticsConfig diagnostics;
  std::vector<ConeRegion> cones;  ///< energy-flux and conformal audits, one each per cone
  AuditSelection audits;
  MultiplierConfig multiplier;
  MainEstimateConfig main_estimate;
  ScatteringConfig scattering;
  AssertConfig thresholds;
  bool deterministic = true;

  bool operator==(const ExperimentConfig&) const;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  MetricPtr make_metric() const;
  EvolutionSpec evolution_spec(const MetricPtr& metric) const;
  /// Explicit r_max, or the finite-speed size for the run.
  RadialGrid make_grid(const MetricPtr& metric) const;
  /// Same config at another resolution.
  ExperimentConfig with_dr(double dr) const;
};

bool operator==(const DataSpec& a, const DataSpec& b);

/// Every field is written, defaults included.
nlohmann::json to_json(const ExperimentConfig& c);
/// Required: metric.family, data.kind, grid.dr, evolution.t_final. Unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);
/// Syntax errors are reported with line and column.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Named presets: "minkowski-reference", "family-a", "family-b", "family-c", "zero".
ExperimentConfig preset(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace qwave
