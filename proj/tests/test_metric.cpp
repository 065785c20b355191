#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "qwave/errors.hpp"
#include "qwave/metric.hpp"

using namespace qwave;

namespace {

const std::vector<std::string> kFamilies{"minkowski", "static_decay", "cone_adapted", "violating"};

MetricParams violating_params() {
  MetricParams p;
  p.epsilon = 0.2;
  p.omega = 3.0;
  return p;
}

MetricPtr family(const std::string& name) {
  return make_metric(name, name == "violating" ? violating_params() : MetricParams{});
}

}  // namespace

TEST(Metric, MinkowskiIsFlatEverywhere) {
  const MetricPtr m = make_metric("minkowski");
  for (double t : {0.0, 3.5, 100.0})
    for (const Vec3& x : {Vec3{0, 0, 0}, Vec3{1, 2, 3}, Vec3{-50, 0.1, 7}}) {
      const MetricSample s = m->eval(t, x);
      EXPECT_EQ(s.g, minkowski());
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
          for (int c = 0; c < 4; ++c) {
            EXPECT_EQ(s.dg[a][b][c], 0.0);
            for (int d = 0; d < 4; ++d) EXPECT_EQ(s.d2g[a][b][c][d], 0.0);
          }
    }
}

TEST(Metric, ZeroEpsilonGivesMinkowskiExactly) {
  MetricParams p;
  p.epsilon = 0.0;
  p.omega = 2.0;
  for (const char* f : {"static_decay", "cone_adapted", "violating"}) {
    const MetricPtr m = make_metric(f, p);
    EXPECT_EQ(m->eval(1.3, {0.4, -2.0, 1.0}).g, minkowski()) << f;
  }
}

TEST(Metric, StaticFamilyAtOrigin) {
  const MetricSample s = make_metric("static_decay")->eval(0.0, {0, 0, 0});
  EXPECT_NEAR(s.g[0][0], -1.05, 1e-15);
  Mat4 rest = s.g;
  rest[0][0] = -1.0;
  EXPECT_EQ(rest, minkowski());
}

TEST(Metric, StaticFamilyAtRadiusThree) {
  // <3>^{-1.1} = 10^{-0.55}
  const double oracle = -1.0 - 0.05 * std::pow(10.0, -0.55);
  const MetricSample s = make_metric("static_decay")->eval(0.0, {0, 3, 0});
  EXPECT_NEAR(s.g[0][0], oracle, 1e-14);
  EXPECT_NEAR(s.g[0][0], -1.0140919, 1e-7);
}

TEST(Metric, RejectsInvalidParameters) {
  MetricParams p;
  p.epsilon = 0.6;
  EXPECT_THROW(make_metric("static_decay", p), ParameterError);
  p.epsilon = 0.05;
  p.gamma = 0.0;
  EXPECT_THROW(make_metric("static_decay", p), ParameterError);
  EXPECT_THROW(make_metric("no_such_family"), ParameterError);
}

TEST(Metric, SymmetryAndSignatureOnRandomSamples) {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> time(0.0, 100.0), coord(-60.0, 60.0);
  constexpr int kSamples = 1'000'000;
  for (const std::string& name : kFamilies) {
    const MetricPtr m = family(name);
    int bad_symmetry = 0, bad_signature = 0;
    for (int k = 0; k < kSamples; ++k) {
      const double t = time(rng);
      const Vec3 x{coord(rng), coord(rng), coord(rng)};
      const MetricSample s = m->eval(t, x);
      Eigen::Matrix4d g;
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
          g(a, b) = s.g[a][b];
          if (s.g[a][b] != s.g[b][a]) ++bad_symmetry;
        }
      // Eigenvalues of a 4x4 are cheap, but a million per family adds up: check every 8th.
      if (k % 8 == 0) {
        const Eigen::Vector4d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d>(g, Eigen::EigenvaluesOnly).eigenvalues();
        const int negative = (ev.array() < 0.0).count();
        if (negative != 1 || !(s.g[0][0] < 0.0)) ++bad_signature;
      } else if (!(s.g[0][0] < 0.0)) {
        ++bad_signature;
      }
    }
    EXPECT_EQ(bad_symmetry, 0) << name;
    EXPECT_EQ(bad_signature, 0) << name;
  }
}

TEST(Metric, ClosedFormDerivativesMatchFiniteDifferences) {
  for (const std::string& name : kFamilies) {
    const MetricPtr m = family(name);
    const auto g = [&](double t, const Vec3& x) { return m->eval(t, x).g; };
    for (const auto& [t, x] : std::vector<std::pair<double, Vec3>>{{2.0, {1.0, 0.5, -0.3}}, {7.5, {3.0, -4.0, 2.0}}}) {
      const MetricSample exact = m->eval(t, x);
      const MetricSample fd = finite_difference_sample(g, t, x, 1e-3);
      for (int mu = 0; mu < 4; ++mu)
        for (int a = 0; a < 4; ++a)
          for (int b = 0; b < 4; ++b) {
            EXPECT_NEAR(exact.dg[mu][a][b], fd.dg[mu][a][b], 1e-8) << name;
            for (int nu = 0; nu < 4; ++nu) EXPECT_NEAR(exact.d2g[mu][nu][a][b], fd.d2g[mu][nu][a][b], 1e-5) << name;
          }
    }
  }
}

TEST(Metric, RadialCoefficientsAgreeWithCartesianEvaluation) {
  for (const std::string& name : kFamilies) {
    const MetricPtr m = family(name);
    const double t = 4.0, r = 2.5;
    const Vec3 w{0.0, 0.6, 0.8};
    const MetricSample s = m->eval(t, {r * w[0], r * w[1], r * w[2]});
    const RadialCoefficients c = m->radial(t, r);
    EXPECT_NEAR(c.g00, s.g[0][0], 1e-14) << name;
    double g0r = 0.0, grr = 0.0;
    for (int i = 0; i < 3; ++i) {
      g0r += s.g[0][i + 1] * w[i];
      for (int j = 0; j < 3; ++j) grr += s.g[i + 1][j + 1] * w[i] * w[j];
    }
    EXPECT_NEAR(c.g0r, g0r, 1e-14) << name;
    EXPECT_NEAR(c.grr, grr, 1e-14) << name;
  }
}

TEST(Metric, NullFrameIsMinkowskiNull) {
  const NullFrame f = NullFrame::at({1.0, -2.0, 0.5});
  const Mat4 m = minkowski();
  double lbar = 0.0, l = 0.0;
  for (int a = 0; a < 4; ++a) {
    lbar += m[a][a] * f.lbar[a] * f.lbar[a];
    l += m[a][a] * f.l[a] * f.l[a];
  }
  EXPECT_NEAR(lbar, 0.0, 1e-15);
  EXPECT_NEAR(l, 0.0, 1e-15);
  EXPECT_EQ(f.lbar[0], -1.0);
  EXPECT_EQ(f.l[0], 1.0);
}

TEST(Metric, NullContractionCases) {
  EXPECT_EQ(null_contraction(*make_metric("minkowski"), 1.0, {1, 1, 1}), 0.0);
  // h proportional to m: the null vector kills it.
  const MetricPtr scaled = make_sampled_metric(
      [](double t, const Vec3& x) {
        Mat4 h = minkowski();
        const double c = 0.01 * std::cos(t) / (1.0 + x[0] * x[0]);
        for (auto& row : h)
          for (double& e : row) e *= c;
        return h;
      },
      false);
  for (const Vec3& x : {Vec3{1, 0, 0}, Vec3{0.3, -2, 5}, Vec3{-7, 1, 1}})
    EXPECT_NEAR(null_contraction(*scaled, 0.7, x), 0.0, 1e-17);
  // Only h^{00}: the contraction is h^{00}.
  const MetricPtr a = make_metric("static_decay");
  const Vec3 x{0, 3, 0};
  EXPECT_NEAR(null_contraction(*a, 0.0, x), a->eval(0.0, x).g[0][0] + 1.0, 1e-16);
  EXPECT_THROW(null_contraction(*a, 0.0, {0, 0, 0}), DomainError);
}

TEST(Metric, CertifyMinkowskiIsZero) {
  const DecayReport r = certify_decay(*make_metric("minkowski"), 0.1, SamplingSpec{});
  for (const HypothesisBound* b : {&r.size, &r.null_size, &r.first_derivative, &r.second_derivative}) {
    EXPECT_EQ(b->amplitude, 0.0) << b->name;
    EXPECT_FALSE(b->unbounded) << b->name;
  }
}

TEST(Metric, CertifyStaticFamilyMatchesBruteForce) {
  // Independent maximization of eps <r>^{-1-g} <r>^g <t+r>^{1/2} / <t-r>^{1/2} over the same box.
  SamplingSpec spec;
  const DecayReport r = certify_decay(*make_metric("static_decay"), 0.1, spec);
  double oracle = 0.0;
  const auto weighted = [](double t, double rr) {
    return 0.05 / bracket(rr) * std::sqrt(bracket(t + rr) / bracket(t - rr));
  };
  for (double scale : {0.25, 0.5, 1.0}) {
    const double tb = spec.t_max * scale, rb = spec.r_max * scale;
    for (int i = 0; i < spec.nt; ++i)
      for (int k = 0; k < spec.nr; ++k) oracle = std::max(oracle, weighted(tb * i / (spec.nt - 1), rb * k / (spec.nr - 1)));
    const int nc = std::max(spec.nt, spec.nr);
    for (int k = 0; k < nc; ++k) oracle = std::max(oracle, weighted(std::min(tb, rb) * k / (nc - 1), std::min(tb, rb) * k / (nc - 1)));
  }
  EXPECT_NEAR(r.size.amplitude, oracle, 1e-12);
  EXPECT_LT(r.size.amplitude, 0.05 * std::sqrt(2.0));
  EXPECT_FALSE(r.size.unbounded);
  EXPECT_FALSE(r.null_size.unbounded);
}

TEST(Metric, CertifyFlagsConstantPerturbation) {
  MetricParams p;
  p.epsilon = 0.05;
  p.omega = 0.0;  // h^{00} = eps, constant
  const DecayReport r = certify_decay(*make_metric("violating", p), 0.1, SamplingSpec{});
  EXPECT_TRUE(r.size.unbounded);
  EXPECT_GT(r.size.nested[2], r.size.nested[1]);
  EXPECT_GT(r.size.nested[1], r.size.nested[0]);
  EXPECT_EQ(r.first_derivative.amplitude, 0.0);
  EXPECT_EQ(r.second_derivative.amplitude, 0.0);
}

TEST(Metric, CertifyIsMonotoneUnderRefinement) {
  SamplingSpec coarse, fine;
  coarse.nt = coarse.nr = 21;
  fine.nt = fine.nr = 41;  // contains every coarse point
  for (const std::string& name : kFamilies) {
    const DecayReport a = certify_decay(*family(name), 0.1, coarse), b = certify_decay(*family(name), 0.1, fine);
    EXPECT_GE(b.size.amplitude, a.size.amplitude) << name;
    EXPECT_GE(b.null_size.amplitude, a.null_size.amplitude) << name;
    EXPECT_GE(b.first_derivative.amplitude, a.first_derivative.amplitude) << name;
    EXPECT_GE(b.second_derivative.amplitude, a.second_derivative.amplitude) << name;
  }
}

TEST(Metric, CertifyRejectsEmptySampleSet) {
  SamplingSpec s;
  s.nt = 0;
  EXPECT_THROW(certify_decay(*make_metric("minkowski"), 0.1, s), ParameterError);
  s = SamplingSpec{};
  s.directions.clear();
  EXPECT_THROW(certify_decay(*make_metric("minkowski"), 0.1, s), ParameterError);
}

TEST(Metric, CharacteristicSpeed) {
  RadialCoefficients c;
  EXPECT_DOUBLE_EQ(characteristic_speed(c), 1.0);
  c.g00 = -1.05;
  EXPECT_NEAR(characteristic_speed(c), 1.0 / std::sqrt(1.05), 1e-15);
}
