#include "qwave/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "qwave/errors.hpp"

namespace qwave {

using nlohmann::json;

bool operator==(const DataSpec& a, const DataSpec& b) {
  return a.kind == b.kind && a.amplitude == b.amplitude && a.width == b.width && a.center == b.center &&
         a.omega == b.omega;
}

bool MetricConfig::operator==(const MetricConfig& o) const {
  return family == o.family && params.epsilon == o.params.epsilon && params.gamma == o.params.gamma &&
         params.scale == o.params.scale && params.omega == o.params.omega;
}

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
  if (cones.size() != o.cones.size()) return false;
  for (std::size_t k = 0; k < cones.size(); ++k)
    if (cones[k].c != o.cones[k].c || cones[k].t1 != o.cones[k].t1 || cones[k].t2 != o.cones[k].t2) return false;
  return name == o.name && metric == o.metric && data == o.data && grid == o.grid && evolution == o.evolution &&
         diagnostics == o.diagnostics && audits == o.audits && multiplier == o.multiplier &&
         main_estimate == o.main_estimate && scattering == o.scattering && thresholds == o.thresholds &&
         deterministic == o.deterministic;
}

namespace {

// Reads one JSON object, tracking the dotted path for error messages and
// rejecting keys that were never read.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "config" : path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  void get(const std::string& key, T& out, bool required = false) {
    seen_.insert(key);
    if (!j_.contains(key)) {
      if (required) throw ConfigError(at(key), "missing required field");
      return;
    }
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(at(key), "wrong type");
    }
  }

  Section child(const std::string& key) {
    seen_.insert(key);
    static const json empty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : empty, at(key));
  }

  const json* raw(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) throw ConfigError(at(item.key()), "unknown field");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& where, const std::string& what) {
  if (!ok) throw ConfigError(where, what);
}

}  // namespace

json to_json(const ExperimentConfig& c) {
  json cones = json::array();
  for (const ConeRegion& r : c.cones) cones.push_back({{"c", r.c}, {"t1", r.t1}, {"t2", r.t2}});
  return {
      {"name", c.name},
      {"metric",
       {{"family", c.metric.family},
        {"epsilon", c.metric.params.epsilon},
        {"gamma", c.metric.params.gamma},
        {"scale", c.metric.params.scale},
        {"omega", c.metric.params.omega}}},
      {"data",
       {{"kind", to_string(c.data.kind)},
        {"amplitude", c.data.amplitude},
        {"width", c.data.width},
        {"center", c.data.center},
        {"omega", c.data.omega}}},
      {"grid", {{"dr", c.grid.dr}, {"r_max", c.grid.r_max}, {"margin", c.grid.margin}}},
      {"evolution",
       {{"mode", to_string(c.evolution.mode)},
        {"nonlinear", c.evolution.nonlinear},
        {"cfl", c.evolution.cfl},
        {"t_final", c.evolution.t_final},
        {"forcing", c.evolution.forcing}}},
      {"diagnostics",
       {{"cadence", c.diagnostics.cadence},
        {"gamma", c.diagnostics.gamma},
        {"ball_radii", c.diagnostics.ball_radii},
        {"cone_offsets", c.diagnostics.cone_offsets},
        {"snapshot_times", c.diagnostics.snapshot_times}}},
      {"cones", cones},
      {"audits",
       {{"energy_flux", c.audits.energy_flux},
        {"conformal", c.audits.conformal},
        {"multiplier", c.audits.multiplier},
        {"main_estimate", c.audits.main_estimate},
        {"lateral_bounds", c.audits.lateral_bounds},
        {"duhamel", c.audits.duhamel}}},
      {"multiplier",
       {{"gamma", c.multiplier.gamma},
        {"terms", c.multiplier.terms},
        {"C", c.multiplier.C},
        {"t1", c.multiplier.t1},
        {"t2", c.multiplier.t2}}},
      {"main_estimate",
       {{"t1", c.main_estimate.t1},
        {"R", c.main_estimate.R},
        {"t2", c.main_estimate.t2},
        {"candidates", c.main_estimate.candidates}}},
      {"scattering", {{"times", c.scattering.times}}},
      {"thresholds",
       {{"energy_drift", c.thresholds.energy_drift},
        {"identity_residual", c.thresholds.identity_residual},
        {"exact_error", c.thresholds.exact_error}}},
      {"deterministic", c.deterministic},
  };
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  Section root(j, "");
  root.get("name", c.name);
  {
    Section s = root.child("metric");
    s.get("family", c.metric.family, true);
    s.get("epsilon", c.metric.params.epsilon);
    s.get("gamma", c.metric.params.gamma);
    s.get("scale", c.metric.params.scale);
    s.get("omega", c.metric.params.omega);
    s.finish();
  }
  {
    Section s = root.child("data");
    std::string kind;
    s.get("kind", kind, true);
    try {
      c.data.kind = data_kind_from_string(kind);
    } catch (const ParameterError& e) {
      throw ConfigError(s.at("kind"), e.what());
    }
    s.get("amplitude", c.data.amplitude);
    s.get("width", c.data.width);
    s.get("center", c.data.center);
    s.get("omega", c.data.omega);
    s.finish();
  }
  {
    Section s = root.child("grid");
    s.get("dr", c.grid.dr, true);
    s.get("r_max", c.grid.r_max);
    s.get("margin", c.grid.margin);
    s.finish();
  }
  {
    Section s = root.child("evolution");
    std::string mode = to_string(c.evolution.mode);
    s.get("mode", mode);
    try {
      c.evolution.mode = operator_mode_from_string(mode);
    } catch (const ParameterError& e) {
      throw ConfigError(s.at("mode"), e.what());
    }
    s.get("nonlinear", c.evolution.nonlinear);
    s.get("cfl", c.evolution.cfl);
    s.get("t_final", c.evolution.t_final, true);
    s.get("forcing", c.evolution.forcing);
    s.finish();
  }
  {
    Section s = root.child("diagnostics");
    s.get("cadence", c.diagnostics.cadence);
    s.get("gamma", c.diagnostics.gamma);
    s.get("ball_radii", c.diagnostics.ball_radii);
    s.get("cone_offsets", c.diagnostics.cone_offsets);
    s.get("snapshot_times", c.diagnostics.snapshot_times);
    s.finish();
  }
  if (const json* cones = root.raw("cones")) {
    require(cones->is_array(), "cones", "expected an array");
    for (std::size_t k = 0; k < cones->size(); ++k) {
      Section s((*cones)[k], "cones[" + std::to_string(k) + "]");
      ConeRegion r;
      s.get("c", r.c, true);
      s.get("t1", r.t1, true);
      s.get("t2", r.t2, true);
      s.finish();
      c.cones.push_back(r);
    }
  }
  {
    Section s = root.child("audits");
    s.get("energy_flux", c.audits.energy_flux);
    s.get("conformal", c.audits.conformal);
    s.get("multiplier", c.audits.multiplier);
    s.get("main_estimate", c.audits.main_estimate);
    s.get("lateral_bounds", c.audits.lateral_bounds);
    s.get("duhamel", c.audits.duhamel);
    s.finish();
  }
  {
    Section s = root.child("multiplier");
    s.get("gamma", c.multiplier.gamma);
    s.get("terms", c.multiplier.terms);
    s.get("C", c.multiplier.C);
    s.get("t1", c.multiplier.t1);
    s.get("t2", c.multiplier.t2);
    s.finish();
  }
  {
    Section s = root.child("main_estimate");
    s.get("t1", c.main_estimate.t1);
    s.get("R", c.main_estimate.R);
    s.get("t2", c.main_estimate.t2);
    s.get("candidates", c.main_estimate.candidates);
    s.finish();
  }
  {
    Section s = root.child("scattering");
    s.get("times", c.scattering.times);
    s.finish();
  }
  {
    Section s = root.child("thresholds");
    s.get("energy_drift", c.thresholds.energy_drift);
    s.get("identity_residual", c.thresholds.identity_residual);
    s.get("exact_error", c.thresholds.exact_error);
    s.finish();
  }
  root.get("deterministic", c.deterministic);
  root.finish();
  c.validate();
  return c;
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    // Convert the byte offset into a line and column.
    std::size_t line = 1, col = 1;
    const std::size_t stop = std::min<std::size_t>(e.byte, text.size());
    for (std::size_t k = 0; k < stop; ++k) {
      if (text[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(col), "syntax error");
  }
  return config_from_json(j);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), "cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void ExperimentConfig::validate() const {
  try {
    metric_family_from_string(metric.family);
  } catch (const ParameterError& e) {
    throw ConfigError("metric.family", e.what());
  }
  require(metric.family != "sampled", "metric.family", "sampled metrics cannot be configured from a file");
  require(std::isfinite(metric.params.epsilon) && metric.params.epsilon >= 0.0 && metric.params.epsilon <= kMaxEpsilon,
          "metric.epsilon", "must lie in [0, 0.5]");
  require(metric.params.gamma > 0.0, "metric.gamma", "must be positive");
  require(metric.params.scale > 0.0, "metric.scale", "must be positive");
  require(std::isfinite(metric.params.omega), "metric.omega", "must be finite");
  require(grid.dr > 0.0 && std::isfinite(grid.dr), "grid.dr", "must be positive");
  require(grid.r_max >= 0.0, "grid.r_max", "must be >= 0 (0 selects auto-sizing)");
  require(grid.margin >= 0.0, "grid.margin", "must be >= 0");
  require(evolution.t_final >= 0.0, "evolution.t_final", "must be >= 0");
  require(evolution.cfl > 0.0 && evolution.cfl <= 1.0, "evolution.cfl", "must lie in (0, 1]");
  require(evolution.forcing == "none" || evolution.forcing == "manufactured", "evolution.forcing",
          "must be \"none\" or \"manufactured\"");
  require(evolution.forcing == "none" || data.kind == DataKind::Manufactured, "evolution.forcing",
          "manufactured forcing needs manufactured data");
  require(diagnostics.cadence > 0.0, "diagnostics.cadence", "must be positive");
  require(diagnostics.gamma > 0.0, "diagnostics.gamma", "must be positive");
  for (double c : diagnostics.cone_offsets) require(c >= 0.0, "diagnostics.cone_offsets", "offsets must be >= 0");
  for (double t : diagnostics.snapshot_times)
    require(t >= 0.0 && t <= evolution.t_final, "diagnostics.snapshot_times", "times must lie in [0, t_final]");
  for (std::size_t k = 0; k < cones.size(); ++k) {
    const std::string at = "cones[" + std::to_string(k) + "]";
    require(cones[k].c >= 0.0, at + ".c", "must be >= 0");
    require(cones[k].t1 >= 0.0 && cones[k].t1 < cones[k].t2, at, "needs 0 <= t1 < t2");
    require(cones[k].t2 <= evolution.t_final, at + ".t2", "must not exceed evolution.t_final");
  }
  require(multiplier.gamma > 0.0, "multiplier.gamma", "must be positive");
  require(multiplier.terms >= 1, "multiplier.terms", "must be >= 1");
  require(multiplier.t1 >= 0.0, "multiplier.t1", "must be >= 0");
  require(multiplier.t2 >= 0.0 && multiplier.t2 <= evolution.t_final, "multiplier.t2", "must lie in [0, t_final]");
  if (audits.main_estimate) {
    require(main_estimate.t1 > 1.0, "main_estimate.t1", "must exceed 1");
    require(main_estimate.R >= 0.0, "main_estimate.R", "must be >= 0");
    require(main_estimate.t2 > main_estimate.t1 + main_estimate.R, "main_estimate.t2", "must exceed t1 + R");
    require(main_estimate.t2 <= evolution.t_final, "main_estimate.t2", "must not exceed evolution.t_final");
    require(main_estimate.candidates >= 1, "main_estimate.candidates", "must be >= 1");
  }
  for (std::size_t k = 0; k < scattering.times.size(); ++k) {
    require(scattering.times[k] > 0.0, "scattering.times", "times must be positive");
    if (k) require(scattering.times[k] > scattering.times[k - 1], "scattering.times", "times must increase");
  }
  require(thresholds.energy_drift > 0.0, "thresholds.energy_drift", "must be positive");
  require(thresholds.identity_residual > 0.0, "thresholds.identity_residual", "must be positive");
  require(thresholds.exact_error > 0.0, "thresholds.exact_error", "must be positive");
}

MetricPtr ExperimentConfig::make_metric() const { return qwave::make_metric(metric.family, metric.params); }

EvolutionSpec ExperimentConfig::evolution_spec(const MetricPtr& m) const {
  EvolutionSpec s;
  s.mode = evolution.mode;
  s.nonlinear = evolution.nonlinear;
  s.cfl = evolution.cfl;
  if (evolution.forcing == "manufactured") s.forcing = manufactured_forcing(data, m, evolution.mode, evolution.nonlinear);
  return s;
}

RadialGrid ExperimentConfig::make_grid(const MetricPtr& m) const {
  const double T = evolution.t_final;
  double need = 0.0;  // radius every diagnostic touches
  for (const ConeRegion& r : cones) need = std::max(need, r.t2 + r.c);
  for (double c : diagnostics.ball_radii) need = std::max(need, c);
  if (audits.main_estimate) need = std::max(need, main_estimate.t2 + main_estimate.R + 1.0);
  if (grid.r_max > 0.0) {
    const RadialGrid g = RadialGrid::covering(grid.dr, grid.r_max);
    if (need > g.last()) throw ConfigError("grid.r_max", "too small for the configured cones and balls");
    return g;
  }
  const double guess = data_radius(data) + 2.0 * T + grid.margin + 1.0;
  const double c_max = max_characteristic_speed(*m, guess, 0.0, T);
  RadialGrid g = size_grid(grid.dr, data_radius(data), c_max, T, grid.margin);
  if (need + grid.margin > g.last()) g = RadialGrid::covering(grid.dr, need + grid.margin + grid.dr);
  return g;
}

ExperimentConfig ExperimentConfig::with_dr(double dr) const {
  ExperimentConfig c = *this;
  c.grid.dr = dr;
  return c;
}

std::vector<std::string> preset_names() {
  return {"zero", "minkowski-reference", "family-a", "family-b", "family-c"};
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  c.data.kind = DataKind::Gaussian;
  c.grid.dr = 0.02;
  c.evolution.t_final = 10.0;
  c.cones = {ConeRegion{2.0, 1.0, 3.0}};
  c.multiplier.t1 = 1.0;
  c.multiplier.t2 = 3.0;
  if (name == "zero") {
    c.data.kind = DataKind::Zero;
  } else if (name == "minkowski-reference") {
    c.metric.family = "minkowski";
    c.grid.dr = 0.01;
  } else if (name == "family-a") {
    c.metric.family = "static_decay";
    c.evolution.t_final = 40.0;
    c.audits.main_estimate = true;
    c.cones.push_back(ConeRegion{2.0, 5.0, 40.0});
  } else if (name == "family-b") {
    c.metric.family = "cone_adapted";
    c.evolution.t_final = 40.0;
    c.cones.push_back(ConeRegion{2.0, 5.0, 40.0});
  } else if (name == "family-c") {
    c.metric.family = "violating";
    c.metric.params.epsilon = 0.2;
    c.metric.params.omega = 3.0;
    c.evolution.t_final = 40.0;
  } else {
    throw ConfigError("preset", "unknown preset '" + name + "'");
  }
  c.diagnostics.snapshot_times = {0.0, c.evolution.t_final};
  c.validate();
  return c;
}

}  // namespace qwave
