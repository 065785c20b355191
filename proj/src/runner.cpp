#include "qwave/runner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <iomanip>
#include <sstream>

#include "qwave/errors.hpp"

#ifndef QWAVE_VERSION
#define QWAVE_VERSION "0.0.0"
#endif

namespace qwave {

using nlohmann::json;

std::string version() { return QWAVE_VERSION; }

double Execution::energy_drift() const {
  return energy0 > 0.0 ? std::abs(energy_final - energy0) / energy0 : std::abs(energy_final - energy0);
}

bool Execution::conserves_energy() const {
  const MetricPtr m = config.make_metric();
  return m->is_static() && config.evolution.forcing == "none";
}

std::vector<double> Execution::series_column(const std::string& name) const {
  for (std::size_t k = 0; k < series_columns.size(); ++k)
    if (series_columns[k].name == name) {
      std::vector<double> out;
      for (const auto& row : series_rows) out.push_back(row[k]);
      return out;
    }
  throw ParameterError("no series column named '" + name + "'");
}

namespace {

double run_energy(const FieldState& s, bool nonlinear) {
  const EnergyNorms n = energy_norms(s);
  return nonlinear ? n.energy : n.linear_energy;
}

std::vector<double> merged_times(std::vector<double> a, const std::vector<double>& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end(), [](double x, double y) { return same_time(x, y); }), a.end());
  return a;
}

const FieldState* find_snapshot(const Execution& e, double t) {
  for (const FieldState& s : e.evolution.snapshots)
    if (same_time(s.t, t)) return &s;
  return nullptr;
}

std::string time_label(double t) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << t;
  return os.str();
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

}  // namespace

Execution execute(const ExperimentConfig& config, const std::optional<std::filesystem::path>& dump) {
  config.validate();
  Execution e;
  e.config = config;
  const MetricPtr metric = config.make_metric();
  const EvolutionSpec spec = config.evolution_spec(metric);
  e.grid = config.make_grid(metric);
  const double T = config.evolution.t_final;
  const double margin = 5.0 * config.grid.dr;
  for (const ConeRegion& c : config.cones) c.validate(e.grid, margin);

  const FieldState initial = make_initial_state(config.data, e.grid);

  DiagnosticSeries series({config.diagnostics.cadence, config.diagnostics.gamma, config.diagnostics.ball_radii,
                           config.diagnostics.cone_offsets});
  std::vector<std::unique_ptr<EnergyFluxObserver>> eflux;
  std::vector<std::unique_ptr<ConformalObserver>> conf;
  std::vector<Observer*> observers{&series};
  for (const ConeRegion& c : config.cones) {
    if (config.audits.energy_flux) {
      eflux.push_back(std::make_unique<EnergyFluxObserver>(c, config.diagnostics.gamma));
      observers.push_back(eflux.back().get());
    }
    if (config.audits.conformal && c.t1 + c.c > 0.0) {
      conf.push_back(std::make_unique<ConformalObserver>(c, config.diagnostics.gamma));
      observers.push_back(conf.back().get());
    }
  }
  std::optional<MultiplierProfile> profile;
  std::unique_ptr<MultiplierObserver> mult;
  const double m_t2 = config.multiplier.t2 > 0.0 ? config.multiplier.t2 : T;
  if (config.audits.multiplier && m_t2 > config.multiplier.t1) {
    profile.emplace(config.multiplier.gamma, config.multiplier.terms, config.multiplier.C);
    mult = std::make_unique<MultiplierObserver>(*profile, config.multiplier.t1, m_t2);
    observers.push_back(mult.get());
  }
  std::unique_ptr<MainEstimateObserver> main;
  if (config.audits.main_estimate) {
    const MainEstimateConfig& me = config.main_estimate;
    main = std::make_unique<MainEstimateObserver>(me.t1, me.R, me.t2, config.diagnostics.gamma, me.candidates);
    observers.push_back(main.get());
  }

  std::vector<double> duhamel_times;
  if (config.audits.duhamel)
    for (long k = 0; k * config.diagnostics.cadence <= T + 1e-12; ++k) duhamel_times.push_back(k * config.diagnostics.cadence);

  EvolveOptions opts;
  opts.snapshot_times = merged_times(config.diagnostics.snapshot_times, duhamel_times);
  opts.dump_path = dump;
  e.evolution = evolve(initial, spec, metric, T, observers, opts);

  e.series_columns = series.columns();
  e.series_rows = series.rows();
  e.energy0 = run_energy(initial, config.evolution.nonlinear);
  e.energy_final = run_energy(e.evolution.final_state, config.evolution.nonlinear);

  const bool closed_form = config.evolution.forcing == "manufactured" ||
                           (has_exact_solution(config.data) && config.metric.family == "minkowski" &&
                            !config.evolution.nonlinear && config.data.kind != DataKind::Manufactured);
  if (closed_form) {
    const FieldState ex = exact_state(config.data, e.grid, T);
    std::vector<double> d2(e.grid.n), x2(e.grid.n);
    for (int i = 0; i < e.grid.n; ++i) {
      d2[i] = std::pow(e.evolution.final_state.u[i] - ex.u[i], 2);
      x2[i] = ex.u[i] * ex.u[i];
    }
    const double num = std::sqrt(integrate_region(e.grid, d2, Region::all()));
    const double den = std::sqrt(integrate_region(e.grid, x2, Region::all()));
    e.exact_error = den > 0.0 ? num / den : num;
  }

  for (const auto& o : eflux) e.energy_flux.push_back(o->result());
  for (const auto& o : conf) e.conformal.push_back(o->result());
  if (mult) e.multiplier = mult->result();
  if (main) e.main_estimate = main->result();

  if (config.audits.lateral_bounds && !config.cones.empty()) {
    SamplingSpec samples;
    samples.t_max = std::max(T, 1.0);
    samples.r_max = e.grid.last();
    e.decay = certify_decay(*metric, config.diagnostics.gamma, samples);
    for (const ConeRegion& c : config.cones)
      e.lateral.push_back(lateral_null_bounds(*metric, c, config.diagnostics.gamma, c.c));
  }
  if (config.audits.duhamel) {
    std::vector<FieldState> snaps;
    for (double t : duhamel_times)
      if (const FieldState* s = find_snapshot(e, t)) snaps.push_back(*s);
    e.duhamel = duhamel_residual(snaps, metric, spec);
  }

  std::vector<double> ts, ys;
  const std::vector<double> t = e.series_column("t"), l6 = e.series_column("L6");
  for (std::size_t k = 0; k < t.size(); ++k)
    if (t[k] >= 1.0 && l6[k] > 0.0) {
      ts.push_back(t[k]);
      ys.push_back(l6[k]);
    }
  if (ts.size() >= 4) e.l6_fit = decay_fit(ts, ys);
  return e;
}

json audits_json(const Execution& e) {
  json j;
  j["grid"] = {{"dr", e.grid.dr}, {"n", e.grid.n}, {"r_max", e.grid.r_max()}};
  j["dt"] = e.evolution.dt;
  j["c_max"] = e.evolution.c_max;
  j["steps"] = e.evolution.steps;
  j["energy"] = {{"initial", e.energy0},
                 {"final", e.energy_final},
                 {"relative_drift", e.energy_drift()},
                 {"conserved_quantity", e.conserves_energy()}};
  j["exact_error"] = e.exact_error ? json(*e.exact_error) : json(nullptr);
  j["energy_flux"] = e.energy_flux;
  j["conformal"] = e.conformal;
  j["multiplier"] = e.multiplier ? json(*e.multiplier) : json(nullptr);
  j["main_estimate"] = e.main_estimate ? json(*e.main_estimate) : json(nullptr);
  j["decay"] = e.decay ? json(*e.decay) : json(nullptr);
  json lat = json::array();
  for (std::size_t k = 0; k < e.lateral.size(); ++k) {
    json b = e.lateral[k];
    if (e.decay) {
      b["within_size"] = e.lateral[k].size_bound <= e.decay->size.amplitude * (1.0 + 1e-9);
      b["within_null_size"] = e.lateral[k].null_bound <= e.decay->null_size.amplitude * (1.0 + 1e-9);
    }
    lat.push_back(b);
  }
  j["lateral_bounds"] = lat;
  j["duhamel"] = e.duhamel ? json(*e.duhamel) : json(nullptr);
  j["l6_fit"] = e.l6_fit ? json(*e.l6_fit) : json(nullptr);
  return j;
}

std::vector<std::string> threshold_failures(const Execution& e) {
  const AssertConfig& th = e.config.thresholds;
  std::vector<std::string> out;
  const auto check = [&](bool ok, const std::string& what) {
    if (!ok) out.push_back(what);
  };
  if (e.conserves_energy())
    check(e.energy_drift() <= th.energy_drift, "energy drift " + std::to_string(e.energy_drift()));
  if (e.exact_error) check(*e.exact_error <= th.exact_error, "exact-solution error " + std::to_string(*e.exact_error));
  const double escale = std::max(e.energy0, 1e-300);
  for (const EnergyFluxAudit& a : e.energy_flux) {
    check(std::abs(a.interior_residual()) <= th.identity_residual * escale, "energy-flux interior residual");
    check(std::abs(a.exterior_residual()) <= th.identity_residual * escale, "energy-flux exterior residual");
  }
  for (const ConformalAudit& a : e.conformal) {
    const double scale = std::max({std::abs(a.P[0]), std::abs(a.P[1]), 1e-300});
    check(std::abs(a.residual()) <= th.identity_residual * scale, "conformal residual");
  }
  if (e.multiplier) {
    const double scale = std::max({std::abs(e.multiplier->boundary[0]), std::abs(e.multiplier->boundary[1]), 1e-300});
    check(std::abs(e.multiplier->residual()) <= th.identity_residual * scale, "multiplier residual");
  }
  return out;
}

RunArtifacts run_experiment(const ExperimentConfig& config, const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  RunArtifacts art;
  art.dir = out;
  write_text(out / "config.json", to_json(config).dump(2) + "\n");
  art.files.push_back("config.json");

  const Execution e = execute(config, out / "failure_dump.bin");

  {
    std::ostringstream csv;
    DiagnosticSeries::write_rows(csv, e.series_columns, e.series_rows);
    write_text(out / "series.csv", csv.str());
    art.files.push_back("series.csv");
  }
  write_text(out / "audits.json", audits_json(e).dump(2) + "\n");
  art.files.push_back("audits.json");
  for (const FieldState& s : e.evolution.snapshots) {
    if (std::none_of(config.diagnostics.snapshot_times.begin(), config.diagnostics.snapshot_times.end(),
                     [&](double t) { return same_time(t, s.t); }))
      continue;
    std::filesystem::create_directories(out / "snapshots");
    const std::string name = "snapshots/t_" + time_label(s.t) + ".bin";
    write_snapshot(out / name, s);
    art.files.push_back(name);
    art.files.push_back(name + ".json");
  }
  art.failures = threshold_failures(e);

  json manifest = {{"tool", "qwave"},
                   {"version", version()},
                   {"compiler", __VERSION__},
                   {"cxx_standard", static_cast<long>(__cplusplus)},
                   {"name", config.name},
                   {"grid", {{"dr", e.grid.dr}, {"n", e.grid.n}, {"r_max", e.grid.r_max()}}},
                   {"dt", e.evolution.dt},
                   {"c_max", e.evolution.c_max},
                   {"steps", e.evolution.steps},
                   {"threshold_failures", art.failures},
                   {"files", art.files}};
  write_text(out / "manifest.json", manifest.dump(2) + "\n");
  art.files.push_back("manifest.json");
  return art;
}

std::vector<std::string> convergence_quantities() {
  return {"energy_flux", "energy_flux_exterior", "conformal", "multiplier", "energy_drift", "exact_error"};
}

double measure(const Execution& e, const std::string& q) {
  const auto need = [&](bool ok) {
    if (!ok) throw ParameterError("quantity '" + q + "' is not available for this configuration");
  };
  if (q == "energy_flux") {
    need(!e.energy_flux.empty());
    return std::abs(e.energy_flux.front().interior_residual());
  }
  if (q == "energy_flux_exterior") {
    need(!e.energy_flux.empty());
    return std::abs(e.energy_flux.front().exterior_residual());
  }
  if (q == "conformal") {
    need(!e.conformal.empty());
    return std::abs(e.conformal.front().residual());
  }
  if (q == "multiplier") {
    need(e.multiplier.has_value());
    return std::abs(e.multiplier->residual());
  }
  if (q == "energy_drift") return e.energy_drift();
  if (q == "exact_error") {
    need(e.exact_error.has_value());
    return *e.exact_error;
  }
  throw ParameterError("unknown convergence quantity '" + q + "'");
}

ConvergenceReport convergence(const ExperimentConfig& config, const std::string& quantity, int resolutions, int jobs) {
  if (resolutions < 2) throw ParameterError("convergence needs at least 2 resolutions");
  const auto known = convergence_quantities();
  if (std::find(known.begin(), known.end(), quantity) == known.end())
    throw ParameterError("unknown convergence quantity '" + quantity + "'");
  ConvergenceReport rep;
  rep.quantity = quantity;
  for (int k = 0; k < resolutions; ++k) rep.dr.push_back(config.grid.dr / std::pow(2.0, k));
  rep.values.resize(resolutions);
  jobs = std::max(jobs, 1);
  for (int start = 0; start < resolutions; start += jobs) {
    std::vector<std::future<double>> pending;
    for (int k = start; k < std::min(resolutions, start + jobs); ++k)
      pending.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred,
                                   [&, k] { return measure(execute(config.with_dr(rep.dr[k])), quantity); }));
    for (int k = start; k < std::min(resolutions, start + jobs); ++k) rep.values[k] = pending[k - start].get();
  }
  for (int k = 1; k < resolutions; ++k)
    rep.ratios.push_back(rep.values[k] > 0.0 ? rep.values[k - 1] / rep.values[k]
                                             : std::numeric_limits<double>::infinity());
  return rep;
}

ScatterReport scatter(const ExperimentConfig& config, int jobs) {
  if (config.scattering.times.empty()) throw ConfigError("scattering.times", "needs at least one time");
  ExperimentConfig c = config;
  c.evolution.t_final = std::max(c.evolution.t_final, c.scattering.times.back());
  c.evolution.forcing = "none";
  c.audits = AuditSelection{false, false, false, false, false, false};
  c.cones.clear();
  c.diagnostics.snapshot_times = c.scattering.times;
  const MetricPtr metric = c.make_metric();

  c.evolution.nonlinear = true;
  ExperimentConfig lc = c;
  lc.evolution.nonlinear = false;
  const auto policy = jobs > 1 ? std::launch::async : std::launch::deferred;
  auto lin_run = std::async(policy, [&] { return execute(lc); });
  const Execution nl = execute(c);
  const Execution lin = lin_run.get();

  ScatterReport rep = extract_profile(nl.evolution.snapshots, metric, c.evolution.mode, c.evolution.cfl, jobs);
  std::vector<FieldState> earlier(nl.evolution.snapshots.begin(), nl.evolution.snapshots.end() - 1);
  rep.forward = forward_defect(earlier, rep.profile(), metric, c.evolution.mode, c.evolution.cfl);

  // Linear solutions scatter to their own data; what is left is the discretization floor.
  const ScatterReport self =
      extract_profile(lin.evolution.snapshots, metric, c.evolution.mode, c.evolution.cfl, jobs);
  const FieldState data = make_initial_state(c.data, nl.grid);
  double floor = 0.0;
  for (const FieldState& w : self.profiles) floor = std::max(floor, energy_defect(w, data));
  rep.floor = floor;

  const auto fit = [](const std::vector<double>& t, const std::vector<double>& y) -> std::optional<DecayFit> {
    std::vector<double> ts, ys;
    for (std::size_t k = 0; k < t.size(); ++k)
      if (t[k] >= 1.0 && std::isfinite(y[k]) && y[k] > 0.0) {
        ts.push_back(t[k]);
        ys.push_back(y[k]);
      }
    if (ts.size() < 4) return std::nullopt;
    return decay_fit(ts, ys);
  };
  const std::vector<double> t = nl.series_column("t");
  rep.l6_fit = fit(t, nl.series_column("L6"));
  if (!c.diagnostics.cone_offsets.empty()) {
    std::ostringstream name;
    name << "flux_c" << c.diagnostics.cone_offsets.front();
    const std::vector<double> cum = nl.series_column(name.str());
    std::vector<double> tw, window;
    for (std::size_t k = 1; k < cum.size(); ++k) {
      tw.push_back(t[k - 1]);
      window.push_back(cum[k] - cum[k - 1]);
    }
    rep.flux_fit = fit(tw, window);
  }
  return rep;
}

json audit_snapshot(const ExperimentConfig& config, const FieldState& start, const std::string& kind) {
  config.validate();
  const MetricPtr metric = config.make_metric();
  const EvolutionSpec spec = config.evolution_spec(metric);
  const auto from = [&](double t1) {
    if (start.t > t1 && !same_time(start.t, t1))
      throw ParameterError("snapshot at t = " + std::to_string(start.t) + " starts after the audit interval");
  };
  const auto cone = [&]() -> const ConeRegion& {
    if (config.cones.empty()) throw ConfigError("cones", "the audit needs a cone");
    const ConeRegion& c = config.cones.front();
    from(c.t1);
    c.validate(start.grid, 0.0);
    return c;
  };
  const auto run = [&](Observer& o, double t2) {
    Observer* obs[] = {&o};
    evolve(start, spec, metric, t2, obs);
  };
  json j;
  if (kind == "energy_flux") {
    const ConeRegion& c = cone();
    EnergyFluxObserver o(c, config.diagnostics.gamma);
    run(o, c.t2);
    j = o.result();
  } else if (kind == "conformal") {
    const ConeRegion& c = cone();
    ConformalObserver o(c, config.diagnostics.gamma);
    run(o, c.t2);
    j = o.result();
  } else if (kind == "multiplier") {
    const double t2 = config.multiplier.t2 > 0.0 ? config.multiplier.t2 : config.evolution.t_final;
    from(config.multiplier.t1);
    const MultiplierProfile p(config.multiplier.gamma, config.multiplier.terms, config.multiplier.C);
    MultiplierObserver o(p, config.multiplier.t1, t2);
    run(o, t2);
    j = o.result();
  } else if (kind == "main_estimate") {
    const MainEstimateConfig& me = config.main_estimate;
    if (!same_time(start.t, 0.0)) throw ParameterError("the main-estimate audit needs the t = 0 snapshot (it uses E(0))");
    MainEstimateObserver o(me.t1, me.R, me.t2, config.diagnostics.gamma, me.candidates);
    run(o, me.t2);
    j = o.result();
  } else {
    throw ParameterError("unknown audit kind '" + kind + "'");
  }
  j["kind"] = kind;
  j["start_time"] = start.t;
  return j;
}

void to_json(json& j, const ConvergenceReport& r) {
  j = {{"quantity", r.quantity}, {"dr", r.dr}, {"values", r.values}, {"ratios", r.ratios}};
}

void to_json(json& j, const DuhamelReport& r) {
  json pts = json::array();
  for (const DuhamelPoint& p : r.points) pts.push_back({{"t", p.t}, {"residual", p.residual}, {"norm", p.norm}});
  j = {{"points", pts}, {"source_samples", r.source_samples}, {"budget", r.budget}, {"partial", r.partial}};
}

}  // namespace qwave
