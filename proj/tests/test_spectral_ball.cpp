#include "fracgelfand/spectral_ball.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

using namespace fracgelfand;

namespace {
constexpr double pi = std::numbers::pi;
}

TEST(BuildBasis, ThreeDimensionalEigenvaluesAreSquaresOfMultiplesOfPi) {
  const auto b = BallBasis::build(3, 0.5, 4);
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(b->eigenvalues()[k] / std::pow((k + 1) * pi, 2), 1.0, 1e-12);
}

TEST(BuildBasis, TwoDimensionalFirstEigenvalue) {
  const double j01 = oracle::bisect(oracle::j0_series, 2.0, 3.0);
  const auto b = BallBasis::build(2, 0.5, 1);
  EXPECT_NEAR(b->eigenvalues()[0], j01 * j01, 1e-9 * j01 * j01);
  EXPECT_NEAR(b->eigenvalues()[0], 5.783185962947, 1e-11);
}

TEST(BuildBasis, OrthonormalUnderQuadrature) {
  for (int n : {2, 3, 5, 6}) {
    const auto b = BallBasis::build(n, 0.5, 64);
    const Eigen::MatrixXd G = gram_matrix(*b);
    EXPECT_LT((G - Eigen::MatrixXd::Identity(64, 64)).cwiseAbs().maxCoeff(), 1e-8) << "n=" << n;
  }
}

TEST(BuildBasis, DirichletConditionAndStrictOrdering) {
  const auto b = BallBasis::build(4, 0.3, 64);
  for (int k = 0; k < 64; ++k) {
    EXPECT_NEAR(b->phi(k, 1.0), 0.0, 1e-10 * std::max(1.0, std::abs(b->phi(k, 0.0))));
    if (k > 0) EXPECT_GT(b->eigenvalues()[k], b->eigenvalues()[k - 1]);
  }
}

TEST(BuildBasis, Preconditions) {
  EXPECT_THROW(BallBasis::build(1, 0.5, 4), DomainError);
  EXPECT_THROW(BallBasis::build(3, 1.5, 4), DomainError);
  EXPECT_THROW(BallBasis::build(3, 0.0, 4), DomainError);
  EXPECT_THROW(BallBasis::build(3, 0.5, 8, 10), DomainError);
  EXPECT_NO_THROW(BallBasis::build(3, 1.0, 4));
}

TEST(BuildBasis, UsesSuppliedZeroSource) {
  int calls = 0;
  ZeroSource src = [&](double nu, int count) {
    ++calls;
    return specfun::bessel_j_zeros(specfun::BesselOrder(nu), count);
  };
  const auto b = BallBasis::build(3, 0.5, 8, 0, src);
  EXPECT_EQ(calls, 1);
  EXPECT_NEAR(b->bessel_zeros()[7], 8 * pi, 1e-12);
}

TEST(Eval, FirstModeInThreeDimensions) {
  const auto b = BallBasis::build(3, 0.5, 8);
  const auto e1 = RadialCoeffs::unit(b, 0);
  const double norm = 1.0 / std::sqrt(2.0 * pi);
  for (double rho : {1e-12, 1e-6, 0.1, 0.5, 0.9}) EXPECT_NEAR(eval(e1, rho), norm * std::sin(pi * rho) / rho, 1e-13);
  EXPECT_NEAR(eval(e1, 0.0), norm * pi, 1e-13);
  EXPECT_NEAR(eval(e1, 1.0), 0.0, 1e-15);
  const auto zero = RadialCoeffs::zero(b);
  EXPECT_EQ(eval(zero, 0.3), 0.0);
}

TEST(Eval, DerivativeMatchesFiniteDifferences) {
  const auto b = BallBasis::build(5, 0.5, 16);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Eigen::VectorXd c(16);
  for (int k = 0; k < 16; ++k) c(k) = g(rng) / (1.0 + k * k);
  const RadialCoeffs u(b, c);
  for (double rho : {0.05, 0.3, 0.7, 0.95}) {
    const double h = 1e-5;
    const double fd = (eval(u, rho + h) - eval(u, rho - h)) / (2 * h);
    EXPECT_NEAR(eval_derivative(u, rho), fd, 1e-6);
  }
  EXPECT_NEAR(eval_derivative(u, 0.0), 0.0, 1e-14);
}

TEST(Analyze, RecoversEigenfunction) {
  const auto b = BallBasis::build(3, 0.5, 32);
  const auto c = analyze(b, [&](double r) { return b->phi(1, r); });
  Eigen::VectorXd e2 = Eigen::VectorXd::Zero(32);
  e2(1) = 1.0;
  EXPECT_LT((c.c - e2).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Analyze, ConstantFunctionInThreeDimensions) {
  const auto b = BallBasis::build(3, 0.5, 16);
  const auto c = analyze(b, [](double) { return 1.0; });
  for (int k = 1; k <= 16; ++k) {
    // 1D oracle: int_0^1 4 pi rho^2 phi_k drho with phi_k = sin(k pi rho)/(rho sqrt(2 pi)).
    const double direct = oracle::simpson([k](double r) { return 4 * pi * r * std::sin(k * pi * r) / std::sqrt(2 * pi); }, 0, 1, 4000);
    const double closed = 2.0 * std::sqrt(2.0 * pi) * ((k % 2) ? 1.0 : -1.0) / (k * pi);
    EXPECT_NEAR(direct, closed, 1e-10);
    EXPECT_NEAR(c.c(k - 1), closed, 1e-10);
  }
}

TEST(Analyze, RoundTripOfRandomCoefficients) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  for (int n : {2, 3, 5}) {
    const auto b = BallBasis::build(n, 0.4, 32);
    Eigen::VectorXd c(32);
    for (int k = 0; k < 32; ++k) c(k) = g(rng) * std::exp(-0.1 * k);
    const RadialCoeffs u(b, c);
    const auto back = analyze_nodes(b, synthesize_nodes(u));
    EXPECT_LT((back.c - c).norm() / c.norm(), 1e-8);
  }
}

TEST(FracLaplacian, EigenfunctionsAndLinearity) {
  const auto b = BallBasis::build(3, 0.35, 8);
  const auto e1 = RadialCoeffs::unit(b, 0);
  EXPECT_NEAR(frac_laplacian(e1).c(0), std::pow(pi * pi, 0.35), 1e-12);
  const auto classical = BallBasis::build(3, 1.0, 8);
  EXPECT_NEAR(frac_laplacian(RadialCoeffs::unit(classical, 1)).c(1), 4 * pi * pi, 1e-10);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  Eigen::VectorXd x(8), y(8);
  for (int k = 0; k < 8; ++k) x(k) = g(rng), y(k) = g(rng);
  const RadialCoeffs u(b, x), w(b, y);
  const auto lhs = frac_laplacian(2.0 * u + (-3.0) * w);
  const auto rhs = 2.0 * frac_laplacian(u) + (-3.0) * frac_laplacian(w);
  EXPECT_LT((lhs.c - rhs.c).norm(), 1e-12 * rhs.c.norm());
}

TEST(FracLaplacian, InverseRoundTripAndZetaPositivity) {
  const auto b = BallBasis::build(3, 0.5, 64);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  Eigen::VectorXd x(64);
  for (auto& v : x) v = g(rng);
  const RadialCoeffs u(b, x);
  EXPECT_LT((frac_laplacian(inv_frac_laplacian(u)).c - x).norm(), 1e-12 * x.norm());
  EXPECT_NEAR(inv_frac_laplacian(RadialCoeffs::unit(b, 0)).c(0), 1.0 / pi, 1e-14);

  const auto zeta0 = inv_frac_laplacian(analyze(b, [](double) { return 1.0; }));
  for (int i = 0; i < 100; ++i) EXPECT_GT(eval(zeta0, i / 100.0), 0.0);
}

TEST(HNorm, Values) {
  const auto b = BallBasis::build(2, 0.6, 8);
  const auto e1 = RadialCoeffs::unit(b, 0);
  EXPECT_NEAR(h_norm(e1), std::pow(b->eigenvalues()[0], 0.3), 1e-14);
  EXPECT_EQ(h_norm(RadialCoeffs::zero(b)), 0.0);
  EXPECT_NEAR(h_norm(-2.5 * e1), 2.5 * h_norm(e1), 1e-14);
}

TEST(Properties, FirstEigenfunctionPositiveInside) {
  for (int n : {2, 3, 6, 20}) {
    const auto b = BallBasis::build(n, 0.5, 4);
    for (int i = 0; i < 200; ++i) EXPECT_GT(b->phi(0, i / 200.0), 0.0) << n;
  }
}

TEST(Properties, ClassicalEigenIdentity) {
  // s = 1: the symbol reproduces the Dirichlet eigenvalues, checked against
  // the Bessel ODE residual -phi'' - (n-1)/rho phi' = mu phi by differences.
  const auto b = BallBasis::build(4, 1.0, 6);
  for (int k = 0; k < 6; ++k) {
    const double rho = 0.37, h = 1e-4;
    const double d2 = (b->phi(k, rho + h) - 2 * b->phi(k, rho) + b->phi(k, rho - h)) / (h * h);
    const double lap = -(d2 + 3.0 / rho * b->dphi(k, rho));
    EXPECT_NEAR(lap / b->phi(k, rho), b->symbol(k), 2e-5 * b->symbol(k));
  }
}

TEST(Properties, MaximumPrincipleForRandomNonnegativeData) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto b = BallBasis::build(3, 0.5, 64);
  for (int trial = 0; trial < 20; ++trial) {
    double a[4];
    for (double& v : a) v = unif(rng);
    const auto h = [&](double r) {
      double sum = 0.0, p = 1.0;
      for (double ai : a) sum += ai * p, p *= r * r;
      return sum;
    };
    const auto u = inv_frac_laplacian(analyze(b, h));
    for (int i = 0; i < 200; ++i) EXPECT_GE(eval(u, i / 199.0), -1e-8);
  }
}
