#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "qwave/errors.hpp"
#include "qwave/multipliers.hpp"

using namespace qwave;

namespace {

// Direct summation, long double, independent of the library's termwise code.
long double b_sum(double gamma, int terms, long double r) {
  long double s = 0;
  for (int j = 0; j < terms; ++j) s += std::pow(2.0L, -j * (long double)gamma) * r / (r + std::pow(2.0L, j));
  return s;
}

long double a_sum(double gamma, int terms, long double r) {
  long double s = 0;
  for (int j = 0; j < terms; ++j) s += std::pow(2.0L, -j * (long double)gamma) / (r + std::pow(2.0L, j));
  return s;
}

}  // namespace

TEST(Multipliers, BAtZeroAndOne) {
  const MultiplierProfile p(0.1, 200);
  EXPECT_EQ(b_weight(p, 0.0).b, 0.0);
  const double oracle200 = static_cast<double>(b_sum(0.1, 200, 1.0L));
  const double oracle400 = static_cast<double>(b_sum(0.1, 400, 1.0L));
  EXPECT_NEAR(oracle200, oracle400, 1e-12);
  EXPECT_NEAR(b_weight(p, 1.0).b, oracle200, 1e-12);
  EXPECT_NEAR(b_weight(p, 1.0).b, 1.160, 1e-3);
}

TEST(Multipliers, BLimitAtInfinity) {
  const MultiplierProfile p(0.1, 200);
  const double geometric = 1.0 / (1.0 - std::pow(2.0, -0.1));
  EXPECT_NEAR(geometric, 14.93, 5e-3);
  EXPECT_NEAR(p.sup_b(), geometric, 1e-4);
  EXPECT_LT(b_weight(p, 1e12).b, p.sup_b());
  EXPECT_GT(b_weight(p, 1e40).b, 0.999 * geometric);
}

TEST(Multipliers, AAtZeroAndOne) {
  const MultiplierProfile p(0.1, 200);
  EXPECT_NEAR(a_weight(p, 0.0).a, 1.0 / (1.0 - std::pow(2.0, -1.1)), 1e-6);
  EXPECT_NEAR(a_weight(p, 0.0).a, 1.8745, 1e-4);
  EXPECT_NEAR(a_weight(p, 1.0).a, b_weight(p, 1.0).b, 1e-15);
  EXPECT_NEAR(a_weight(p, 1.0).a, static_cast<double>(a_sum(0.1, 200, 1.0L)), 1e-12);
}

TEST(Multipliers, ATimesREqualsB) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> lr(-6.0, 12.0);
  for (double gamma : {0.05, 0.1, 0.3}) {
    const MultiplierProfile p(gamma, 200);
    for (int k = 0; k < 1000; ++k) {
      const double r = std::pow(2.0, lr(rng));
      EXPECT_NEAR(a_weight(p, r).a * r, b_weight(p, r).b, 1e-14 * b_weight(p, r).b);
    }
  }
}

TEST(Multipliers, MonotoneOnSampledGrid) {
  const MultiplierProfile p(0.1, 200);
  const std::vector<double> r = dyadic_radii(-8, 12, 16);
  for (std::size_t k = 1; k < r.size(); ++k) {
    EXPECT_GT(b_weight(p, r[k]).b, b_weight(p, r[k - 1]).b);
    EXPECT_LT(a_weight(p, r[k]).a, a_weight(p, r[k - 1]).a);
  }
}

TEST(Multipliers, DerivativesMatchDifferenceQuotients) {
  const MultiplierProfile p(0.1, 200);
  for (double r : {0.3, 1.0, 7.0, 150.0}) {
    const double h = 1e-4 * r;
    const BWeight b = b_weight(p, r);
    EXPECT_NEAR(b.db, (b_weight(p, r + h).b - b_weight(p, r - h).b) / (2 * h), 1e-7 * std::abs(b.db) + 1e-12);
    EXPECT_NEAR(b.d2b, (b_weight(p, r + h).db - b_weight(p, r - h).db) / (2 * h), 1e-6 * std::abs(b.d2b) + 1e-12);
    const AWeight a = a_weight(p, r);
    EXPECT_NEAR(a.laplacian, a.d2a + 2.0 * a.da / r, 1e-12 * std::abs(a.laplacian));
    EXPECT_NEAR(a.laplacian_r2, a.laplacian * r * r, 1e-12 * std::abs(a.laplacian_r2));
  }
}

TEST(Multipliers, NonlinearWeightTermwiseIdentity) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> lr(-8.0, 12.0);
  const MultiplierProfile p(0.1, 200);
  for (int k = 0; k < 10000; ++k) {
    const double r = std::pow(2.0, lr(rng));
    const double difference = 2.0 / 3.0 * a_weight(p, r).a - b_weight(p, r).db / 6.0;
    EXPECT_NEAR(nonlinear_weight(p, r), difference, 1e-12 * std::abs(difference));
  }
}

TEST(Multipliers, NonlinearWeightAtOne) {
  const MultiplierProfile p(0.1, 200);
  long double oracle = 0;
  for (int j = 0; j < 200; ++j) {
    const long double q = 1.0L + std::pow(2.0L, j);
    oracle += std::pow(2.0L, -0.1L * j) * (0.5L / q + (1.0L / 6.0L) / (q * q));
  }
  EXPECT_NEAR(nonlinear_weight(p, 1.0), static_cast<double>(oracle), 1e-13);
  EXPECT_GT(nonlinear_weight(p, 1.0), 0.25);
}

TEST(Multipliers, CertifiedForShippedGammas) {
  for (double gamma : {0.05, 0.1, 0.3}) {
    const LowerBoundReport r = certify_lower_bounds(MultiplierProfile(gamma, 200), dyadic_radii(-4, 10));
    EXPECT_TRUE(r.certified) << gamma;
    for (const LowerBound* b : {&r.radial_derivative, &r.angular, &r.potential, &r.nonlinear}) {
      EXPECT_GT(b->infimum, 0.0) << gamma << " " << b->name;
      EXPECT_TRUE(b->positive);
    }
  }
}

TEST(Multipliers, SingleTermProfile) {
  const MultiplierProfile p(0.1, 1);
  for (double r : dyadic_radii(-4, 10)) {
    EXPECT_NEAR(b_weight(p, r).b, r / (r + 1.0), 1e-15);
    EXPECT_NEAR(b_weight(p, r).db, 1.0 / ((r + 1.0) * (r + 1.0)), 1e-15);
  }
  EXPECT_GT(certify_lower_bounds(p, dyadic_radii(-4, 10)).radial_derivative.infimum, 0.0);
}

TEST(Multipliers, TailBoundCoversDoubledTruncation) {
  const MultiplierProfile p(0.1, 200), p2(0.1, 400);
  for (double r : dyadic_radii(-4, 20, 2)) {
    const double change = std::abs(b_weight(p2, r).b - b_weight(p, r).b);
    EXPECT_LE(change, p.tail_bound(r) + 1e-15 * b_weight(p, r).b) << r;
    EXPECT_LE(p.tail_bound(r), 1e-8 * b_weight(p, r).b) << r;
  }
}

TEST(Multipliers, DefaultConstantC) {
  const MultiplierProfile p(0.1, 200);
  EXPECT_NEAR(p.c(), 4.0 * (1.0 + p.sup_b()), 1e-12);
  EXPECT_EQ(MultiplierProfile(0.1, 200, 7.0).c(), 7.0);
}

TEST(Multipliers, RejectsBadParameters) {
  EXPECT_THROW(MultiplierProfile(0.0, 200), ParameterError);
  EXPECT_THROW(MultiplierProfile(0.1, 0), ParameterError);
}
