#pragma once

#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "qwave/grid.hpp"
#include "qwave/metric.hpp"
#include "qwave/solver.hpp"

namespace qwave {

struct DefectPoint {
  double t = 0.0;
  double defect = 0.0;  ///< ||u(t) - S(t,0)w||_{Hdot^1 x L^2}
};

/// Least-squares line through (log t, log y).
struct DecayFit {
  double exponent = 0.0;
  double intercept = 0.0;
  double r_squared = 1.0;  ///< 1 for an exact power law (and for constant series)
  int samples = 0;
};

struct ScatterReport {
  std::vector<double> times;              ///< extraction times T_k, increasing
  std::vector<FieldState> profiles;       ///< w_k = S(0, T_k) u[T_k]
  std::vector<double> cauchy_defects;     ///< ||w_{k+1} - w_k||
  bool cauchy_decreasing = false;
  std::vector<DefectPoint> forward;       ///< against the last profile
  std::optional<DecayFit> l6_fit, flux_fit;
  std::optional<double> floor;            ///< linear self-consistency defect, when measured

  const FieldState& profile() const { return profiles.back(); }
};

/// Backward linear evolution of each snapshot to t = 0 (snapshots sorted by time, strictly increasing).
/// Independent evolutions run on up to `jobs` threads.
ScatterReport extract_profile(std::span<const FieldState> snapshots, MetricPtr metric,
                              OperatorMode mode = OperatorMode::Divergence, double cfl = 0.5, int jobs = 1);

/// Linear evolution of `profile` from t = 0 compared with the run at each snapshot time.
std::vector<DefectPoint> forward_defect(std::span<const FieldState> run, const FieldState& profile, MetricPtr metric,
                                        OperatorMode mode = OperatorMode::Divergence, double cfl = 0.5);

/// Needs at least 4 samples with t > 0 and y > 0 (DomainError otherwise).
DecayFit decay_fit(std::span<const double> t, std::span<const double> y);

void to_json(nlohmann::json& j, const DefectPoint& p);
void to_json(nlohmann::json& j, const DecayFit& f);
/// Profiles are omitted; they are written as snapshots.
void to_json(nlohmann::json& j, const ScatterReport& r);

}  // namespace qwave
