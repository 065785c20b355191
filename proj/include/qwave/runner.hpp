#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qwave/config.hpp"
#include "qwave/functionals.hpp"
#include "qwave/scattering.hpp"

namespace qwave {

/// Everything one configured evolution produces, before it is written out.
struct Execution {
  ExperimentConfig config;
  RadialGrid grid;
  EvolveResult evolution;
  std::vector<SeriesColumn> series_columns;
  std::vector<std::vector<double>> series_rows;
  double energy0 = 0.0;           ///< nonlinear energy (linear energy for linear runs)
  double energy_final = 0.0;
  std::optional<double> exact_error;  ///< relative L2 error at t_final
  std::vector<EnergyFluxAudit> energy_flux;
  std::vector<ConformalAudit> conformal;
  std::optional<MultiplierAudit> multiplier;
  std::optional<MainEstimateAudit> main_estimate;
  std::optional<DecayReport> decay;
  std::vector<LateralBounds> lateral;
  std::optional<DuhamelReport> duhamel;
  std::optional<DecayFit> l6_fit;

  /// Relative energy drift, meaningful for static metrics without forcing.
  double energy_drift() const;
  bool conserves_energy() const;
  std::vector<double> series_column(const std::string& name) const;
};

/// Runs the configured evolution and audits. On a non-finite state the last good
/// state is written to `dump` (when given) and SolverError propagates.
Execution execute(const ExperimentConfig& config, const std::optional<std::filesystem::path>& dump = std::nullopt);

/// Audit JSON for an execution.
nlohmann::json audits_json(const Execution& e);

/// Threshold checks against config.thresholds; one message per failure.
std::vector<std::string> threshold_failures(const Execution& e);

struct RunArtifacts {
  std::filesystem::path dir;
  std::vector<std::string> files;
  std::vector<std::string> failures;  ///< threshold failures (enforced only under --assert)
};

/// Writes config.json, series.csv, audits.json, snapshots/ and manifest.json into `out`.
RunArtifacts run_experiment(const ExperimentConfig& config, const std::filesystem::path& out);

/// Named quantities for refinement studies.
///   energy_flux, energy_flux_exterior, conformal, multiplier   |identity residual|
///   energy_drift                                               |E(T) - E(0)| / E(0)
///   exact_error                                                relative L2 error vs closed form
std::vector<std::string> convergence_quantities();
double measure(const Execution& e, const std::string& quantity);

struct ConvergenceReport {
  std::string quantity;
  std::vector<double> dr;
  std::vector<double> values;
  std::vector<double> ratios;  ///< values[k-1] / values[k]
};

/// Runs the config at dr, dr/2, ... (`resolutions` levels) on up to `jobs` threads.
ConvergenceReport convergence(const ExperimentConfig& config, const std::string& quantity, int resolutions = 3,
                              int jobs = 1);

/// Nonlinear run to max(scattering.times), profile extraction, forward defects against the
/// last profile, a linear run for the floor, and descriptive decay fits.
ScatterReport scatter(const ExperimentConfig& config, int jobs = 1);

/// One identity audit ("energy_flux", "conformal", "multiplier" or "main_estimate") evolved
/// from a stored snapshot, which must not start after the audit interval. Cones and
/// intervals come from the config (first cone).
nlohmann::json audit_snapshot(const ExperimentConfig& config, const FieldState& start, const std::string& kind);

void to_json(nlohmann::json& j, const ConvergenceReport& r);
void to_json(nlohmann::json& j, const DuhamelReport& r);

/// Version string written into manifests.
std::string version();

}  // namespace qwave
