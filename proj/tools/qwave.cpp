// Command-line front end: run, check-metric, check-multiplier, convergence, scatter, audit.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "qwave/config.hpp"
#include "qwave/errors.hpp"
#include "qwave/multipliers.hpp"
#include "qwave/runner.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qwave;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitAssert = 2;

struct Source {
  std::string config;
  std::string preset;

  void attach(CLI::App* app) {
    auto* c = app->add_option("--config", config, "experiment config (JSON)");
    auto* p = app->add_option("--preset", preset, "named preset instead of a config file");
    c->excludes(p);
  }

  ExperimentConfig load() const {
    if (!config.empty()) return load_config(config);
    if (!preset.empty()) return qwave::preset(preset);
    throw ConfigError("--config", "give --config PATH or --preset NAME");
  }
};

// JSON goes to `out`/name when an output directory is given, otherwise to stdout.
void emit(const json& j, const std::string& out, const std::string& name) {
  if (out.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  fs::create_directories(out);
  std::ofstream f(fs::path(out) / name, std::ios::binary);
  f << j.dump(2) << "\n";
  std::cout << (fs::path(out) / name).string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical lab for the quintic wave equation on perturbed Minkowski space"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version());

  // run
  Source run_src;
  std::string run_out = "out";
  bool run_assert = false;
  auto* run = app.add_subcommand("run", "evolve a configured experiment and write series, audits and manifest");
  run_src.attach(run);
  run->add_option("--out", run_out, "output directory");
  run->add_flag("--assert", run_assert, "exit with status 2 when a threshold in the config fails");

  // check-metric
  Source cm_src;
  std::string cm_family, cm_out;
  MetricParams cm_params;
  double cm_gamma = 0.0;
  SamplingSpec cm_samples;
  bool cm_assert = false;
  auto* cm = app.add_subcommand("check-metric", "certify the decay hypotheses of a metric family on a sample box");
  cm_src.attach(cm);
  cm->add_option("--family", cm_family, "minkowski, static_decay, cone_adapted or violating");
  cm->add_option("--epsilon", cm_params.epsilon);
  cm->add_option("--metric-gamma", cm_params.gamma, "decay exponent of the family");
  cm->add_option("--scale", cm_params.scale);
  cm->add_option("--omega", cm_params.omega);
  cm->add_option("--gamma", cm_gamma, "weight exponent for the certification (default: family gamma)");
  cm->add_option("--t-max", cm_samples.t_max);
  cm->add_option("--r-max", cm_samples.r_max);
  cm->add_option("--nt", cm_samples.nt);
  cm->add_option("--nr", cm_samples.nr);
  cm->add_option("--out", cm_out, "output directory (default: stdout)");
  cm->add_flag("--assert", cm_assert, "exit with status 2 when any amplitude is flagged unbounded");

  // check-multiplier
  double mu_gamma = 0.1;
  int mu_terms = 200, mu_lo = -10, mu_hi = 10, mu_per = 8;
  std::string mu_out;
  bool mu_assert = false;
  auto* mu = app.add_subcommand("check-multiplier", "certify the four lower bounds of the multiplier weights");
  mu->add_option("--gamma", mu_gamma);
  mu->add_option("--terms", mu_terms);
  mu->add_option("--min-level", mu_lo, "smallest dyadic radius 2^lo");
  mu->add_option("--max-level", mu_hi, "largest dyadic radius 2^hi");
  mu->add_option("--per-octave", mu_per);
  mu->add_option("--out", mu_out, "output directory (default: stdout)");
  mu->add_flag("--assert", mu_assert, "exit with status 2 unless all infima are positive");

  // convergence
  Source cv_src;
  std::string cv_quantity = "conformal", cv_out;
  int cv_resolutions = 3, cv_jobs = 1;
  double cv_lo = 3.0, cv_hi = 5.0;
  bool cv_assert = false;
  auto* cv = app.add_subcommand("convergence", "refinement study of an audit residual or error");
  cv_src.attach(cv);
  cv->add_option("--quantity", cv_quantity, "one of: energy_flux, energy_flux_exterior, conformal, multiplier, "
                                            "energy_drift, exact_error");
  cv->add_option("--resolutions", cv_resolutions, "number of grids dr, dr/2, ...");
  cv->add_option("--jobs", cv_jobs, "resolutions run concurrently");
  cv->add_option("--min-ratio", cv_lo);
  cv->add_option("--max-ratio", cv_hi);
  cv->add_option("--out", cv_out, "output directory (default: stdout)");
  cv->add_flag("--assert", cv_assert, "exit with status 2 unless every ratio lies in [min-ratio, max-ratio]");

  // scatter
  Source sc_src;
  std::string sc_out;
  int sc_jobs = 1;
  bool sc_assert = false;
  auto* sc = app.add_subcommand("scatter", "extract scattering profiles and measure Cauchy and forward defects");
  sc_src.attach(sc);
  sc->add_option("--jobs", sc_jobs, "backward evolutions run concurrently");
  sc->add_option("--out", sc_out, "output directory (default: stdout)");
  sc->add_flag("--assert", sc_assert, "exit with status 2 unless the Cauchy defects decrease");

  // audit
  Source au_src;
  std::string au_kind = "energy_flux", au_snapshot, au_out;
  auto* au = app.add_subcommand("audit", "single identity audit evolved from a stored snapshot");
  au_src.attach(au);
  au->add_option("--kind", au_kind, "energy_flux, conformal, multiplier or main_estimate");
  au->add_option("--snapshot", au_snapshot, "binary snapshot written by run")->required();
  au->add_option("--out", au_out, "output directory (default: stdout)");

  // presets
  std::string pr_name;
  auto* pr = app.add_subcommand("preset", "print a preset config (or list presets)");
  pr->add_option("name", pr_name);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const RunArtifacts art = run_experiment(run_src.load(), run_out);
      for (const std::string& f : art.files) std::cout << (art.dir / f).string() << "\n";
      for (const std::string& f : art.failures) std::cerr << "threshold: " << f << "\n";
      return run_assert && !art.failures.empty() ? kExitAssert : 0;
    }
    if (cm->parsed()) {
      MetricPtr metric;
      if (!cm_family.empty()) {
        metric = make_metric(cm_family, cm_params);
      } else {
        metric = cm_src.load().make_metric();
      }
      const double gamma = cm_gamma > 0.0 ? cm_gamma : metric->params().gamma;
      const DecayReport rep = certify_decay(*metric, gamma, cm_samples);
      emit(rep, cm_out, "decay.json");
      const bool flagged = rep.size.unbounded || rep.null_size.unbounded || rep.first_derivative.unbounded ||
                           rep.second_derivative.unbounded;
      return cm_assert && flagged ? kExitAssert : 0;
    }
    if (mu->parsed()) {
      const MultiplierProfile p(mu_gamma, mu_terms);
      const LowerBoundReport rep = certify_lower_bounds(p, dyadic_radii(mu_lo, mu_hi, mu_per));
      json j = rep;
      j["b_at_1"] = b_weight(p, 1.0).b;
      j["a_at_0"] = a_weight(p, 0.0).a;
      j["C"] = p.c();
      emit(j, mu_out, "multiplier.json");
      return mu_assert && !rep.certified ? kExitAssert : 0;
    }
    if (cv->parsed()) {
      const ConvergenceReport rep = convergence(cv_src.load(), cv_quantity, cv_resolutions, cv_jobs);
      bool ok = true;
      for (double r : rep.ratios) ok = ok && r >= cv_lo && r <= cv_hi;
      json j = rep;
      j["ratio_window"] = {cv_lo, cv_hi};
      j["within_window"] = ok;
      emit(j, cv_out, "convergence.json");
      return cv_assert && !ok ? kExitAssert : 0;
    }
    if (sc->parsed()) {
      const ScatterReport rep = scatter(sc_src.load(), sc_jobs);
      if (!sc_out.empty()) {
        fs::create_directories(sc_out);
        write_snapshot(fs::path(sc_out) / "profile.bin", rep.profile());
      }
      emit(rep, sc_out, "scatter.json");
      return sc_assert && !rep.cauchy_decreasing ? kExitAssert : 0;
    }
    if (au->parsed()) {
      const json j = audit_snapshot(au_src.load(), read_snapshot(au_snapshot), au_kind);
      emit(j, au_out, "audit_" + au_kind + ".json");
      return 0;
    }
    if (pr->parsed()) {
      if (pr_name.empty()) {
        for (const std::string& n : preset_names()) std::cout << n << "\n";
      } else {
        std::cout << to_json(preset(pr_name)).dump(2) << "\n";
      }
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return 0;
}
