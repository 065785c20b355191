#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "qwave/config.hpp"
#include "qwave/errors.hpp"
#include "qwave/runner.hpp"

using namespace qwave;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"({
  "metric": {"family": "static_decay", "epsilon": 0.05},
  "data": {"kind": "gaussian", "amplitude": 0.5},
  "grid": {"dr": 0.05},
  "evolution": {"t_final": 2.0}
})";

std::string where_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.where();
  }
  return "";
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

ExperimentConfig small_zero() {
  ExperimentConfig c = preset("zero");
  c.grid.dr = 0.05;
  c.evolution.t_final = 3.0;
  c.diagnostics.snapshot_times = {0.0, 3.0};
  return c;
}

}  // namespace

TEST(Config, MinimalConfigFillsDefaults) {
  const ExperimentConfig c = parse_config(kMinimal);
  EXPECT_EQ(c.metric.family, "static_decay");
  EXPECT_EQ(c.data.amplitude, 0.5);
  EXPECT_EQ(c.grid.dr, 0.05);
  EXPECT_EQ(c.evolution.cfl, 0.5);
  EXPECT_TRUE(c.audits.energy_flux);
  EXPECT_FALSE(c.audits.main_estimate);
}

TEST(Config, JsonRoundTrip) {
  for (const std::string& name : preset_names()) {
    const ExperimentConfig c = preset(name);
    EXPECT_EQ(config_from_json(to_json(c)), c) << name;
    EXPECT_EQ(parse_config(to_json(c).dump(2)), c) << name;
  }
}

TEST(Config, MissingRequiredFieldIsNamed) {
  EXPECT_EQ(where_of(R"({"metric": {"family": "minkowski"}, "data": {"kind": "zero"},
                          "grid": {}, "evolution": {"t_final": 1.0}})"),
            "grid.dr");
  EXPECT_EQ(where_of(R"({"metric": {"family": "minkowski"}, "data": {"kind": "zero"},
                          "grid": {"dr": 0.1}, "evolution": {}})"),
            "evolution.t_final");
}

TEST(Config, UnknownFieldIsRejected) {
  EXPECT_EQ(where_of(R"({"metric": {"family": "minkowski"}, "data": {"kind": "zero"},
                          "grid": {"dr": 0.1, "dx": 0.1}, "evolution": {"t_final": 1.0}})"),
            "grid.dx");
}

TEST(Config, InvalidValuesAreNamed) {
  EXPECT_EQ(where_of(R"({"metric": {"family": "minkowski"}, "data": {"kind": "zero"},
                          "grid": {"dr": -0.1}, "evolution": {"t_final": 1.0}})"),
            "grid.dr");
  EXPECT_EQ(where_of(R"({"metric": {"family": "wobbly"}, "data": {"kind": "zero"},
                          "grid": {"dr": 0.1}, "evolution": {"t_final": 1.0}})"),
            "metric.family");
  EXPECT_EQ(where_of(R"({"metric": {"family": "minkowski"}, "data": {"kind": "zero"},
                          "grid": {"dr": 0.1}, "evolution": {"t_final": 1.0, "cfl": 2}})"),
            "evolution.cfl");
}

TEST(Config, SyntaxErrorReportsLine) {
  try {
    parse_config("{\n  \"metric\": {\"family\": \"minkowski\"},\n  \"grid\": {\"dr\": 0.1,,}\n}");
    FAIL() << "no error";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Config, LoadFromFile) {
  const fs::path p = fs::temp_directory_path() / "qwave_config_test.json";
  {
    std::ofstream f(p);
    f << kMinimal;
  }
  EXPECT_EQ(load_config(p), parse_config(kMinimal));
  fs::remove(p);
  EXPECT_THROW(load_config(p), ConfigError);
}

TEST(Config, PresetsValidate) {
  const std::vector<std::string> names = preset_names();
  for (const char* expected : {"zero", "minkowski-reference", "family-a", "family-b", "family-c"})
    EXPECT_NE(std::find(names.begin(), names.end(), expected), names.end()) << expected;
  for (const std::string& n : names) EXPECT_NO_THROW(preset(n).validate()) << n;
  EXPECT_THROW(preset("no-such-preset"), ConfigError);
  EXPECT_EQ(preset("family-c").metric.family, "violating");
  EXPECT_EQ(preset("minkowski-reference").grid.dr, 0.01);
}

TEST(Config, ZeroDataRunIsQuiet) {
  const Execution e = execute(small_zero());
  EXPECT_EQ(e.energy0, 0.0);
  EXPECT_EQ(e.energy_final, 0.0);
  EXPECT_TRUE(threshold_failures(e).empty());
  for (double x : e.series_column("E")) EXPECT_EQ(x, 0.0);
}

TEST(Config, RunsAreBitReproducible) {
  ExperimentConfig c = preset("family-a");
  c.grid.dr = 0.05;
  c.evolution.t_final = 3.0;
  c.audits.main_estimate = false;
  c.cones = {{2.0, 1.0, 3.0}};
  c.diagnostics.snapshot_times = {0.0, 3.0};
  const fs::path a = fs::temp_directory_path() / "qwave_repro_a";
  const fs::path b = fs::temp_directory_path() / "qwave_repro_b";
  fs::remove_all(a);
  fs::remove_all(b);
  const RunArtifacts ra = run_experiment(c, a);
  const RunArtifacts rb = run_experiment(c, b);
  ASSERT_EQ(ra.files, rb.files);
  for (const std::string& f : ra.files) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  EXPECT_EQ(parse_config(slurp(a / "config.json")), c);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Config, WithDrChangesOnlyResolution) {
  const ExperimentConfig c = preset("family-b");
  ExperimentConfig d = c.with_dr(0.005);
  EXPECT_EQ(d.grid.dr, 0.005);
  d.grid.dr = c.grid.dr;
  EXPECT_EQ(d, c);
}
