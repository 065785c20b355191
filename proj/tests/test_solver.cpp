#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "qwave/errors.hpp"
#include "qwave/initial_data.hpp"
#include "qwave/solver.hpp"

using namespace qwave;

namespace {

MetricPtr flat() { return make_metric(MetricFamily::Minkowski); }

RadialGrid grid_for(const DataSpec& d, double dr, double t_final, const MetricField& m) {
  return size_grid(dr, data_radius(d), max_characteristic_speed(m, 100.0, 0.0, t_final), t_final, 2.0);
}

EvolutionSpec linear_spec(OperatorMode mode = OperatorMode::Divergence) {
  EvolutionSpec s;
  s.mode = mode;
  s.nonlinear = false;
  return s;
}

// Sup-norm of u - exact over r <= r_cut at time t.
double exact_error(const DataSpec& d, double dr, double t_final, MetricPtr m, EvolutionSpec spec) {
  const RadialGrid g = grid_for(d, dr, t_final, *m);
  if (d.kind == DataKind::Manufactured) spec.forcing = manufactured_forcing(d, m, spec.mode, spec.nonlinear);
  const FieldState end = evolve(make_initial_state(d, g), spec, m, t_final).final_state;
  const FieldState ref = exact_state(d, g, t_final);
  double e = 0.0;
  for (int i = 0; i < g.n; ++i) e = std::max(e, std::abs(end.u[i] - ref.u[i]));
  return e;
}

DataSpec gaussian(double amplitude = 1.0) {
  DataSpec d;
  d.kind = DataKind::Gaussian;
  d.amplitude = amplitude;
  return d;
}

double energy(const FieldState& s) { return energy_norms(s).energy; }

}  // namespace

TEST(Solver, TimeStepIsReciprocalMultipleOfFour) {
  const double dt = time_step(0.02, 1.0, 0.5);
  const double m = 1.0 / dt;
  EXPECT_NEAR(m, std::round(m), 1e-9);
  EXPECT_EQ(static_cast<long>(std::round(m)) % 4, 0);
  EXPECT_LE(dt / 0.02, 0.5);
  EXPECT_GT(1.0 / (m - 4.0) / 0.02, 0.5);
  EXPECT_THROW(time_step(0.02, 1.0, 1.0), ParameterError);
  EXPECT_THROW(time_step(0.0, 1.0, 0.5), ParameterError);
  EXPECT_EQ(steps_to(2.5, 0.0125), 200);
  EXPECT_THROW(steps_to(0.013, 0.0125), ParameterError);
}

TEST(Solver, SizeGridCoversDomainOfDependence) {
  const RadialGrid g = size_grid(0.02, 3.0, 1.1, 10.0, 2.0);
  EXPECT_GE(g.r_max(), 3.0 + 11.0 + 2.0);
}

TEST(Solver, ZeroDataStaysZero) {
  DataSpec d;
  d.kind = DataKind::Zero;
  for (const char* family : {"minkowski", "static_decay", "cone_adapted", "violating"}) {
    MetricParams p;
    if (std::string(family) == "violating") p.omega = 3.0;
    const MetricPtr m = make_metric(family, p);
    const RadialGrid g = RadialGrid::covering(0.05, 10.0);
    const EvolveResult r = evolve(make_initial_state(d, g), EvolutionSpec{}, m, 3.0);
    for (int i = 0; i < g.n; ++i) {
      ASSERT_EQ(r.final_state.u[i], 0.0) << family;
      ASSERT_EQ(r.final_state.v[i], 0.0) << family;
    }
  }
}

TEST(Solver, DAlembertSecondOrder) {
  DataSpec d;
  d.kind = DataKind::DAlembert;
  d.center = 3.0;
  d.width = 1.0;
  const double e1 = exact_error(d, 0.04, 4.0, flat(), linear_spec());
  const double e2 = exact_error(d, 0.02, 4.0, flat(), linear_spec());
  const double e3 = exact_error(d, 0.01, 4.0, flat(), linear_spec());
  EXPECT_LT(e3, 1e-3);
  EXPECT_NEAR(e1 / e2, 4.0, 0.4);
  EXPECT_NEAR(e2 / e3, 4.0, 0.4);
}

TEST(Solver, MinkowskiEnergyConserved) {
  const DataSpec d = gaussian();
  for (double dr : {0.02, 0.01}) {
    const RadialGrid g = grid_for(d, dr, 10.0, *flat());
    const FieldState s0 = make_initial_state(d, g);
    const FieldState s1 = evolve(s0, EvolutionSpec{}, flat(), 10.0).final_state;
    EXPECT_LT(std::abs(energy(s1) - energy(s0)) / energy(s0), 1e-3) << dr;
  }
}

TEST(Solver, StaticFamilyEnergyStaysComparable) {
  const DataSpec d = gaussian();
  const MetricPtr m = make_metric(MetricFamily::StaticDecay);
  const RadialGrid g = grid_for(d, 0.02, 20.0, *m);
  EvolveOptions opt;
  for (int k = 1; k <= 20; ++k) opt.snapshot_times.push_back(k);
  const FieldState s0 = make_initial_state(d, g);
  const EvolveResult r = evolve(s0, EvolutionSpec{}, m, 20.0, {}, opt);
  for (const FieldState& s : r.snapshots) EXPECT_LE(energy(s), 1.2 * energy(s0)) << s.t;
}

TEST(Solver, ManufacturedSolutionConverges) {
  DataSpec d;
  d.kind = DataKind::Manufactured;
  d.amplitude = 0.5;
  d.width = 1.0;
  d.omega = 2.0;
  const MetricPtr m = make_metric(MetricFamily::ConeAdapted);
  for (OperatorMode mode : {OperatorMode::Divergence, OperatorMode::Geometric}) {
    EvolutionSpec spec;
    spec.mode = mode;
    const double e1 = exact_error(d, 0.04, 2.0, m, spec);
    const double e2 = exact_error(d, 0.02, 2.0, m, spec);
    const double e3 = exact_error(d, 0.01, 2.0, m, spec);
    EXPECT_NEAR(e1 / e2, 4.0, 0.5) << to_string(mode);
    EXPECT_NEAR(e2 / e3, 4.0, 0.5) << to_string(mode);
  }
}

TEST(Solver, FiniteSpeedOfPropagation) {
  DataSpec d;
  d.kind = DataKind::Bump;
  d.center = 3.0;
  d.width = 1.0;
  const RadialGrid g = RadialGrid::covering(0.02, 20.0);
  const FieldState end = evolve(make_initial_state(d, g), EvolutionSpec{}, flat(), 2.0).final_state;
  // Support [2, 4] travels at unit speed; beyond 4 + 2 + a few cells nothing arrives.
  for (int i = 0; i < g.n; ++i) {
    if (g.r(i) < 7.0) continue;
    ASSERT_LT(std::abs(end.u[i]), 1e-10) << g.r(i);
    ASSERT_LT(std::abs(end.v[i]), 1e-10) << g.r(i);
  }
}

TEST(Solver, TimeReversalRecoversData) {
  for (const char* family : {"minkowski", "static_decay", "cone_adapted"}) {
    const MetricPtr m = make_metric(family);
    const DataSpec d = gaussian();
    const RadialGrid g = grid_for(d, 0.02, 5.0, *m);
    const FieldState s0 = make_initial_state(d, g);
    const FieldState s1 = evolve(s0, EvolutionSpec{}, m, 5.0).final_state;
    const FieldState back = evolve(s1, EvolutionSpec{}, m, 0.0).final_state;
    EXPECT_NEAR(back.t, 0.0, 1e-12);
    // Exactly reversible for static metrics; second order in dt otherwise.
    const double tol = m->is_static() ? 1e-10 : 1e-3;
    EXPECT_LT(energy_defect(back, s0), tol * std::sqrt(energy(s0))) << family;
  }
}

TEST(Solver, LinearRoundTrip) {
  const DataSpec d = gaussian();
  const MetricPtr m = make_metric(MetricFamily::StaticDecay);
  const RadialGrid g = grid_for(d, 0.02, 6.0, *m);
  const FieldState s0 = make_initial_state(d, g);
  const FieldState s1 = linear_evolve(s0, m, 6.0);
  EXPECT_NEAR(s1.t, 6.0, 1e-12);
  EXPECT_LT(energy_defect(backward_linear(s1, m), s0), 1e-10);
}

TEST(Solver, RejectsBadCflAndDegenerateMetric) {
  const RadialGrid g = RadialGrid::covering(0.05, 5.0);
  EvolutionSpec bad;
  bad.cfl = 1.5;
  EXPECT_THROW(Solver(g, flat(), bad, 0.0, 1.0), ParameterError);
  const MetricPtr degenerate = make_sampled_metric(
      [](double, const Vec3&) {
        Mat4 h{};
        h[0][0] = 0.8;
        return h;
      },
      true);
  EXPECT_THROW(evolve(FieldState::zeros(g), EvolutionSpec{}, degenerate, 1.0), SolverError);
  EXPECT_THROW(Solver(RadialGrid{0.1, 4}, flat(), EvolutionSpec{}, 0.0, 1.0), ParameterError);
}

TEST(Solver, StepSizeMustMatch) {
  const RadialGrid g = RadialGrid::covering(0.05, 5.0);
  const Solver s(g, flat(), EvolutionSpec{}, 0.0, 1.0);
  EXPECT_THROW(s.step(FieldState::zeros(g), 0.5 * s.dt()), SolverError);
  EXPECT_THROW(s.step(FieldState::zeros(RadialGrid::covering(0.1, 5.0)), s.dt()), DomainError);
}

TEST(Solver, NonFiniteStateIsDumped) {
  const DataSpec d = gaussian();
  const RadialGrid g = grid_for(d, 0.05, 2.0, *flat());
  EvolutionSpec spec;
  spec.forcing = [](double t, double) { return t > 0.5 ? std::numeric_limits<double>::quiet_NaN() : 0.0; };
  EvolveOptions opt;
  opt.dump_path = std::filesystem::temp_directory_path() / "qwave_nan_dump.bin";
  std::filesystem::remove(*opt.dump_path);
  EXPECT_THROW(evolve(make_initial_state(d, g), spec, flat(), 2.0, {}, opt), SolverError);
  ASSERT_TRUE(std::filesystem::exists(*opt.dump_path));
  const FieldState last = read_snapshot(*opt.dump_path);
  EXPECT_NO_THROW(last.check_finite());
  EXPECT_LE(last.t, 0.5 + 1e-12);
  std::filesystem::remove(*opt.dump_path);
  std::filesystem::remove(std::filesystem::path(*opt.dump_path) += ".json");
}

TEST(Solver, SnapshotsAtRequestedTimes) {
  const DataSpec d = gaussian();
  const RadialGrid g = grid_for(d, 0.05, 2.0, *flat());
  EvolveOptions opt;
  opt.snapshot_times = {0.0, 0.5, 2.0};
  const EvolveResult r = evolve(make_initial_state(d, g), EvolutionSpec{}, flat(), 2.0, {}, opt);
  ASSERT_EQ(r.snapshots.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(r.snapshots[k].t, opt.snapshot_times[k], 1e-12);
  EXPECT_EQ(r.snapshots[2].u, r.final_state.u);
  EXPECT_EQ(r.steps, steps_to(2.0, r.dt));
  opt.snapshot_times = {3.0};
  EXPECT_THROW(evolve(make_initial_state(d, g), EvolutionSpec{}, flat(), 2.0, {}, opt), ParameterError);
}

namespace {

std::vector<FieldState> cadence_run(const DataSpec& d, double dr, double t_final, double cadence, MetricPtr m,
                                    const EvolutionSpec& spec) {
  const RadialGrid g = grid_for(d, dr, t_final, *m);
  EvolveOptions opt;
  for (double t = 0.0; t <= t_final + 1e-12; t += cadence) opt.snapshot_times.push_back(t);
  return evolve(make_initial_state(d, g), spec, m, t_final, {}, opt).snapshots;
}

double worst_relative(const DuhamelReport& r) {
  double w = 0.0;
  for (const DuhamelPoint& p : r.points) w = std::max(w, p.norm > 0.0 ? p.residual / p.norm : p.residual);
  return w;
}

}  // namespace

TEST(Solver, DuhamelExactForLinearFlow) {
  const EvolutionSpec spec = linear_spec();
  const auto snaps = cadence_run(gaussian(), 0.02, 2.0, 0.25, flat(), spec);
  const DuhamelReport r = duhamel_residual(snaps, flat(), spec);
  EXPECT_FALSE(r.partial);
  EXPECT_LT(worst_relative(r), 1e-10);
}

TEST(Solver, DuhamelZeroData) {
  DataSpec d;
  d.kind = DataKind::Zero;
  const auto snaps = cadence_run(d, 0.05, 2.0, 0.5, flat(), EvolutionSpec{});
  const DuhamelReport r = duhamel_residual(snaps, flat(), EvolutionSpec{});
  for (const DuhamelPoint& p : r.points) EXPECT_EQ(p.residual, 0.0);
}

TEST(Solver, DuhamelResidualShrinksWithCadence) {
  const DataSpec d = gaussian();
  const auto coarse = cadence_run(d, 0.02, 2.0, 0.5, flat(), EvolutionSpec{});
  const auto fine = cadence_run(d, 0.02, 2.0, 0.25, flat(), EvolutionSpec{});
  const double rc = duhamel_residual(coarse, flat(), EvolutionSpec{}).points.back().residual;
  const double rf = duhamel_residual(fine, flat(), EvolutionSpec{}).points.back().residual;
  EXPECT_GT(rc / rf, 3.0);
  EXPECT_LT(rf, 0.05 * duhamel_residual(fine, flat(), EvolutionSpec{}).points.back().norm);
}

TEST(Solver, DuhamelBudget) {
  const auto snaps = cadence_run(gaussian(), 0.05, 4.0, 0.25, flat(), EvolutionSpec{});
  const DuhamelReport r = duhamel_residual(snaps, flat(), EvolutionSpec{}, 4);
  EXPECT_TRUE(r.partial);
  EXPECT_LE(r.source_samples, 4);
  EXPECT_THROW(duhamel_residual(snaps, flat(), EvolutionSpec{}, 0), ParameterError);
}
