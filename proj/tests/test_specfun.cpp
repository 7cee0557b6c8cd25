#include "fracgelfand/specfun.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace fracgelfand;
using specfun::BesselOrder;

namespace {
constexpr double pi = std::numbers::pi;
}

TEST(Gamma, KnownValues) {
  EXPECT_NEAR(specfun::gamma(0.5), 1.7724538509055160, 1e-15);
  EXPECT_DOUBLE_EQ(specfun::gamma(1.0), 1.0);
  EXPECT_NEAR(specfun::gamma(5.0), 24.0, 24.0 * 1e-14);
}

TEST(Gamma, RecurrenceOnGrid) {
  for (double x = 1e-3; x < 49.0; x *= 1.37) {
    const double lhs = specfun::gamma(x + 1.0);
    EXPECT_NEAR(lhs / (x * specfun::gamma(x)), 1.0, 1e-12) << "x=" << x;
  }
}

TEST(Gamma, RejectsNonpositive) {
  EXPECT_THROW(specfun::gamma(0.0), DomainError);
  EXPECT_THROW(specfun::gamma(-1.5), DomainError);
}

TEST(BesselJ, HalfOrderClosedForm) {
  const BesselOrder half(0.5);
  EXPECT_NEAR(specfun::bessel_j(half, pi), 0.0, 1e-15);
  EXPECT_NEAR(specfun::bessel_j(half, pi / 2), 2.0 / pi, 1e-15);
  for (double x = 0.05; x < 60.0; x += 0.37) {
    const double exact = std::sqrt(2.0 / (pi * x)) * std::sin(x);
    EXPECT_NEAR(specfun::bessel_j(half, x), exact, 1e-13 * std::max(1.0, std::abs(exact)));
  }
}

TEST(BesselJ, OrderZeroAtOrigin) { EXPECT_DOUBLE_EQ(specfun::bessel_j(BesselOrder(0.0), 0.0), 1.0); }

TEST(BesselJ, ScaledFormIsContinuousAcrossSeriesSwitch) {
  for (double nu : {0.0, 0.5, 1.0, 2.0, 9.0}) {
    const BesselOrder o(nu);
    const double below = specfun::scaled_bessel_j(o, 1.0 - 1e-12);
    const double above = specfun::scaled_bessel_j(o, 1.0);
    EXPECT_NEAR(below, above, 1e-12 * std::abs(above)) << nu;
    EXPECT_NEAR(specfun::scaled_bessel_j(o, 0.0), std::pow(2.0, -nu) / std::tgamma(nu + 1.0), 1e-15);
  }
}

TEST(BesselOrder, RejectsOutOfRange) {
  EXPECT_THROW(BesselOrder(-0.1), DomainError);
  EXPECT_THROW(BesselOrder(61.0), DomainError);
  EXPECT_THROW(BesselOrder(std::nan("")), DomainError);
}

TEST(BesselZeros, HalfOrderAreMultiplesOfPi) {
  const auto z = specfun::bessel_j_zeros(BesselOrder(0.5), 3);
  ASSERT_EQ(z.size(), 3u);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(z[k], (k + 1) * pi, 1e-13);
}

TEST(BesselZeros, FirstZeroOfJ0MatchesBisectionOracle) {
  const double ref = oracle::bisect(oracle::j0_series, 2.0, 3.0);
  EXPECT_NEAR(ref, 2.404825557695773, 1e-14);
  const auto z = specfun::bessel_j_zeros(BesselOrder(0.0), 1);
  EXPECT_NEAR(z[0], ref, 1e-14);
}

TEST(BesselZeros, StrictlyIncreasingRootsForManyOrders) {
  for (double nu : {0.0, 0.5, 1.0, 1.5, 2.0, 9.0, 24.5, 60.0}) {
    const BesselOrder o(nu);
    const auto z = specfun::bessel_j_zeros(o, 300);
    for (std::size_t k = 0; k < z.size(); ++k) {
      EXPECT_LE(std::abs(specfun::bessel_j(o, z[k])), 1e-12) << "nu=" << nu << " k=" << k;
      if (k > 0) EXPECT_GT(z[k], z[k - 1] + 1.0);
    }
    // No zero skipped: J_nu changes sign exactly once between neighbours.
    EXPECT_GT(z[0], nu);
  }
}

TEST(BesselZeros, NewtonStepFixesPerturbedZero) {
  const BesselOrder o(1.5);
  const auto z = specfun::bessel_j_zeros(o, 5);
  double x = z[4] + 1e-6;
  x = specfun::bessel_j_zero_newton_step(o, x);
  EXPECT_NEAR(x, z[4], 1e-11);
}

TEST(BesselK, HalfOrderClosedForm) {
  EXPECT_NEAR(specfun::bessel_k(0.5, 1.0), std::sqrt(pi / 2) * std::exp(-1.0), 1e-15);
  EXPECT_NEAR(specfun::bessel_k(0.5, 2.0), std::sqrt(pi / 4) * std::exp(-2.0), 1e-15);
  EXPECT_NEAR(specfun::bessel_k(0.5, 1.0), 0.4610685, 1e-7);
  EXPECT_NEAR(specfun::bessel_k(0.5, 2.0), 0.1199377, 1e-7);
  for (double x = 1e-3; x <= 30.0; x *= 1.21) {
    const double exact = std::sqrt(pi / (2 * x)) * std::exp(-x);
    EXPECT_NEAR(specfun::bessel_k(0.5, x) / exact, 1.0, 1e-10) << x;
  }
}

TEST(BesselK, MatchesIndependentSeriesBelowTwo) {
  for (double s : {0.25, 0.3, 0.5, 0.7, 0.75}) {
    for (double x : {1e-3, 0.05, 0.5, 1.0, 1.7, 2.0}) {
      const double ref = oracle::bessel_k_series(s, x);
      EXPECT_NEAR(specfun::bessel_k(s, x) / ref, 1.0, 1e-10) << s << " " << x;
    }
  }
}

TEST(BesselK, ContinuousAcrossTwo) {
  for (double s : {0.25, 0.5, 0.75}) {
    const double a = specfun::bessel_k(s, 2.0 - 1e-9), b = specfun::bessel_k(s, 2.0 + 1e-9);
    EXPECT_NEAR(a / b, 1.0, 1e-8);  // derivative term ~2e-9 relative, no jump
  }
}

TEST(BesselK, PositiveAndDecreasing) {
  for (double s : {0.25, 0.5, 0.75}) {
    double prev = INFINITY;
    for (double x = 1e-3; x <= 30.0; x *= 1.05) {
      const double v = specfun::bessel_k(s, x);
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, prev);
      prev = v;
    }
  }
}

TEST(BesselK, SmallArgumentScaling) {
  for (double s : {0.25, 0.5, 0.75}) {
    const double limit = 0.5 * specfun::gamma(s) * std::pow(2.0, s);
    const double x = 1e-10;
    // Correction is O(x^{2s}).
    EXPECT_NEAR(std::pow(x, s) * specfun::bessel_k(s, x) / limit, 1.0, 4.0 * std::pow(x, 2 * s));
  }
}

TEST(BesselK, DomainErrors) {
  EXPECT_THROW(specfun::bessel_k(0.5, 0.0), DomainError);
  EXPECT_THROW(specfun::bessel_k(1.0, 1.0), DomainError);
}
