#include "qwave/scattering.hpp"

#include <algorithm>
#include <cmath>
#include <future>

#include "qwave/errors.hpp"

namespace qwave {

ScatterReport extract_profile(std::span<const FieldState> snapshots, MetricPtr metric, OperatorMode mode, double cfl,
                              int jobs) {
  if (snapshots.empty()) throw ParameterError("extract_profile needs at least one snapshot");
  for (std::size_t k = 1; k < snapshots.size(); ++k)
    if (!(snapshots[k].t > snapshots[k - 1].t)) throw ParameterError("extraction times must be strictly increasing");
  jobs = std::max(jobs, 1);

  ScatterReport rep;
  rep.profiles.resize(snapshots.size());
  for (std::size_t start = 0; start < snapshots.size(); start += jobs) {
    const std::size_t stop = std::min(snapshots.size(), start + static_cast<std::size_t>(jobs));
    std::vector<std::future<FieldState>> pending;
    for (std::size_t k = start; k < stop; ++k)
      pending.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred,
                                   [&, k] { return backward_linear(snapshots[k], metric, mode, cfl); }));
    for (std::size_t k = start; k < stop; ++k) rep.profiles[k] = pending[k - start].get();
  }
  for (const FieldState& s : snapshots) rep.times.push_back(s.t);
  for (std::size_t k = 1; k < rep.profiles.size(); ++k)
    rep.cauchy_defects.push_back(energy_defect(rep.profiles[k], rep.profiles[k - 1]));
  rep.cauchy_decreasing = rep.cauchy_defects.size() >= 2;
  for (std::size_t k = 1; k < rep.cauchy_defects.size(); ++k)
    if (!(rep.cauchy_defects[k] < rep.cauchy_defects[k - 1])) rep.cauchy_decreasing = false;
  return rep;
}

std::vector<DefectPoint> forward_defect(std::span<const FieldState> run, const FieldState& profile, MetricPtr metric,
                                        OperatorMode mode, double cfl) {
  std::vector<DefectPoint> out;
  if (run.empty()) return out;
  std::vector<FieldState> sorted(run.begin(), run.end());
  std::sort(sorted.begin(), sorted.end(), [](const FieldState& a, const FieldState& b) { return a.t < b.t; });
  EvolutionSpec spec;
  spec.mode = mode;
  spec.nonlinear = false;
  spec.cfl = cfl;
  EvolveOptions opts;
  for (const FieldState& s : sorted) opts.snapshot_times.push_back(s.t);
  const EvolveResult lin = evolve(profile, spec, std::move(metric), sorted.back().t, {}, opts);
  for (std::size_t k = 0; k < sorted.size(); ++k)
    out.push_back({sorted[k].t, energy_defect(sorted[k], lin.snapshots[k])});
  return out;
}

DecayFit decay_fit(std::span<const double> t, std::span<const double> y) {
  if (t.size() != y.size()) throw ParameterError("decay_fit needs equal-length series");
  if (t.size() < 4) throw DomainError("decay_fit needs at least 4 samples");
  const std::size_t n = t.size();
  double sx = 0, sy = 0;
  std::vector<double> lx(n), ly(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (!(t[k] > 0.0) || !(y[k] > 0.0)) throw DomainError("decay_fit needs positive times and samples");
    lx[k] = std::log(t[k]);
    ly[k] = std::log(y[k]);
    sx += lx[k];
    sy += ly[k];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t k = 0; k < n; ++k) {
    sxx += (lx[k] - mx) * (lx[k] - mx);
    sxy += (lx[k] - mx) * (ly[k] - my);
    syy += (ly[k] - my) * (ly[k] - my);
  }
  if (!(sxx > 0.0)) throw DomainError("decay_fit needs distinct times");
  DecayFit f;
  f.samples = static_cast<int>(n);
  f.exponent = sxy / sxx;
  f.intercept = my - f.exponent * mx;
  const double scale = std::max(1.0, std::abs(my));
  f.r_squared = syy <= 1e-24 * scale * scale ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

void to_json(nlohmann::json& j, const DefectPoint& p) { j = {{"t", p.t}, {"defect", p.defect}}; }

void to_json(nlohmann::json& j, const DecayFit& f) {
  j = {{"exponent", f.exponent}, {"intercept", f.intercept}, {"r_squared", f.r_squared}, {"samples", f.samples}};
}

void to_json(nlohmann::json& j, const ScatterReport& r) {
  j = {{"times", r.times},
       {"cauchy_defects", r.cauchy_defects},
       {"cauchy_decreasing", r.cauchy_decreasing},
       {"forward", r.forward}};
  j["l6_fit"] = r.l6_fit ? nlohmann::json(*r.l6_fit) : nlohmann::json(nullptr);
  j["flux_fit"] = r.flux_fit ? nlohmann::json(*r.flux_fit) : nlohmann::json(nullptr);
  j["floor"] = r.floor ? nlohmann::json(*r.floor) : nlohmann::json(nullptr);
}

}  // namespace qwave
