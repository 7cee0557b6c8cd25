#pragma once

// Radial Dirichlet eigensystem of -Delta on the unit ball of R^n and the
// spectral fractional Laplacian acting on eigen-coefficient vectors.
//
// phi_k(rho) = N_k rho^{1-n/2} J_{n/2-1}(j_k rho),  mu_k = j_k^2,
// with N_k fixed by the L^2(B_1) normalization.

#include "fracgelfand/quadrature.hpp"
#include "fracgelfand/specfun.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace fracgelfand {

/// Supplies the first `count` positive zeros of J_nu.
using ZeroSource = std::function<std::vector<double>(double nu, int count)>;

/// Surface area of the unit sphere S^{m-1} in R^m (real m > 0 allowed).
inline double sphere_area(double m) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * m) / specfun::gamma(0.5 * m);
}

class BallBasis;
using BasisPtr = std::shared_ptr<const BallBasis>;

class BallBasis {
 public:
  /// quad_order = 0 selects the default 4K Gauss-Legendre nodes.
  static BasisPtr build(int n, double s, int modes, int quad_order = 0, const ZeroSource& zeros = {}) {
    if (n < 2) throw DomainError("dimension n must be >= 2, got " + std::to_string(n));
    if (!(s > 0.0 && s <= 1.0)) throw DomainError("order s must lie in (0,1], got " + std::to_string(s));
    if (modes < 1) throw DomainError("number of modes must be >= 1");
    if (quad_order == 0) quad_order = 4 * modes;
    if (quad_order < 2 * modes) throw DomainError("quad_order must be >= 2K");

    auto b = std::shared_ptr<BallBasis>(new BallBasis());
    b->n_ = n;
    b->s_ = s;
    b->nu_ = 0.5 * n - 1.0;
    b->area_ = sphere_area(n);
    const specfun::BesselOrder order(b->nu_);
    b->zeros_ = zeros ? zeros(b->nu_, modes) : specfun::bessel_j_zeros(order, modes);
    if (static_cast<int>(b->zeros_.size()) != modes) throw ConvergenceError("zero source returned wrong count");

    const auto K = static_cast<std::size_t>(modes);
    b->mu_.resize(K);
    b->norm_.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
      const double j = b->zeros_[k];
      b->mu_[k] = j * j;
      b->norm_[k] = std::sqrt(2.0 / b->area_) / std::abs(specfun::bessel_j(specfun::BesselOrder(b->nu_ + 1.0), j));
    }

    const quadrature::Rule gl = quadrature::gauss_legendre(quad_order, 0.0, 1.0);
    b->nodes_ = gl.nodes;
    b->weights_.resize(gl.size());
    for (std::size_t i = 0; i < gl.size(); ++i)
      b->weights_[i] = gl.weights[i] * std::pow(gl.nodes[i], n - 1) * b->area_;

    b->node_values_.resize(static_cast<Eigen::Index>(gl.size()), modes);
    for (std::size_t i = 0; i < gl.size(); ++i)
      for (int k = 0; k < modes; ++k) b->node_values_(static_cast<Eigen::Index>(i), k) = b->phi(k, gl.nodes[i]);
    b->origin_values_.resize(modes);
    for (int k = 0; k < modes; ++k) b->origin_values_(k) = b->phi(k, 0.0);
    return b;
  }

  int dim() const { return n_; }
  double order() const { return s_; }
  int modes() const { return static_cast<int>(mu_.size()); }
  double bessel_order() const { return nu_; }
  double sphere() const { return area_; }
  std::span<const double> eigenvalues() const { return mu_; }
  std::span<const double> bessel_zeros() const { return zeros_; }
  std::span<const double> norm_consts() const { return norm_; }
  std::span<const double> quad_nodes() const { return nodes_; }
  /// Radial quadrature weights including rho^{n-1} |S^{n-1}|.
  std::span<const double> quad_weights() const { return weights_; }
  /// phi_k at the quadrature nodes, one column per mode.
  const Eigen::MatrixXd& node_values() const { return node_values_; }
  const Eigen::VectorXd& origin_values() const { return origin_values_; }

  /// mu_k^s for 0-based k.
  double symbol(int k) const { return std::pow(mu_[static_cast<std::size_t>(k)], s_); }

  /// phi_k(rho) for 0-based k; the axis rho -> 0 uses the series limit.
  double phi(int k, double rho) const {
    const auto i = static_cast<std::size_t>(k);
    const double j = zeros_[i];
    return norm_[i] * std::pow(j, nu_) * specfun::scaled_bessel_j(specfun::BesselOrder(nu_), j * rho);
  }

  /// d phi_k / d rho = -N_k j_k rho^{-nu} J_{nu+1}(j_k rho).
  double dphi(int k, double rho) const {
    const auto i = static_cast<std::size_t>(k);
    const double j = zeros_[i];
    const double x = j * rho;
    return -norm_[i] * std::pow(j, nu_ + 1.0) * x * specfun::scaled_bessel_j(specfun::BesselOrder(nu_ + 1.0), x);
  }

  /// Copy with mu_k scaled by `factor` while the eigenfunctions stay put.
  /// Fault-injection hook for the verification suite.
  BasisPtr with_perturbed_eigenvalue(int k, double factor) const {
    auto b = std::make_shared<BallBasis>(*this);
    b->mu_.at(static_cast<std::size_t>(k)) *= factor;
    return b;
  }

 private:
  BallBasis() = default;

  int n_ = 0;
  double s_ = 0.0;
  double nu_ = 0.0;
  double area_ = 0.0;
  std::vector<double> zeros_, mu_, norm_, nodes_, weights_;
  Eigen::MatrixXd node_values_;
  Eigen::VectorXd origin_values_;
};

/// A radial function u = sum_k c_k phi_k on a given basis.
struct RadialCoeffs {
  BasisPtr basis;
  Eigen::VectorXd c;

  RadialCoeffs() = default;
  RadialCoeffs(BasisPtr b, Eigen::VectorXd coeffs) : basis(std::move(b)), c(std::move(coeffs)) {
    if (c.size() != basis->modes()) throw DomainError("coefficient vector length does not match basis");
  }

  static RadialCoeffs zero(BasisPtr b) {
    const int K = b->modes();
    return {std::move(b), Eigen::VectorXd::Zero(K)};
  }
  /// The k-th unit vector (0-based), i.e. the eigenfunction phi_k.
  static RadialCoeffs unit(BasisPtr b, int k) {
    auto u = zero(std::move(b));
    u.c(k) = 1.0;
    return u;
  }

  RadialCoeffs& operator+=(const RadialCoeffs& o) {
    c += o.c;
    return *this;
  }
  friend RadialCoeffs operator+(RadialCoeffs a, const RadialCoeffs& b) { return a += b; }
  friend RadialCoeffs operator-(RadialCoeffs a, const RadialCoeffs& b) {
    a.c -= b.c;
    return a;
  }
  friend RadialCoeffs operator*(double a, RadialCoeffs u) {
    u.c *= a;
    return u;
  }
};

inline double eval(const RadialCoeffs& u, double rho) {
  double sum = 0.0;
  for (int k = 0; k < u.c.size(); ++k) sum += u.c(k) * u.basis->phi(k, rho);
  return sum;
}

/// du/drho by term-wise differentiation of the eigenfunctions.
inline double eval_derivative(const RadialCoeffs& u, double rho) {
  double sum = 0.0;
  for (int k = 0; k < u.c.size(); ++k) sum += u.c(k) * u.basis->dphi(k, rho);
  return sum;
}

/// u at the basis quadrature nodes.
inline Eigen::VectorXd synthesize_nodes(const RadialCoeffs& u) { return u.basis->node_values() * u.c; }

/// c_k = int_{B_1} u phi_k dx from values at the quadrature nodes.
inline RadialCoeffs analyze_nodes(BasisPtr basis, const Eigen::VectorXd& values) {
  const Eigen::Map<const Eigen::VectorXd> w(basis->quad_weights().data(), static_cast<Eigen::Index>(basis->quad_weights().size()));
  Eigen::VectorXd c = basis->node_values().transpose() * w.cwiseProduct(values);
  return {std::move(basis), std::move(c)};
}

/// c_k = int_{B_1} u phi_k dx for a radial profile u(rho).
inline RadialCoeffs analyze(BasisPtr basis, const std::function<double(double)>& profile) {
  const auto nodes = basis->quad_nodes();
  Eigen::VectorXd values(static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t i = 0; i < nodes.size(); ++i) values(static_cast<Eigen::Index>(i)) = profile(nodes[i]);
  return analyze_nodes(std::move(basis), values);
}

inline RadialCoeffs frac_laplacian(RadialCoeffs u) {
  for (int k = 0; k < u.c.size(); ++k) u.c(k) *= u.basis->symbol(k);
  return u;
}

inline RadialCoeffs inv_frac_laplacian(RadialCoeffs h) {
  for (int k = 0; k < h.c.size(); ++k) h.c(k) /= h.basis->symbol(k);
  return h;
}

/// ||u||_H = sqrt(sum_k mu_k^s c_k^2).
inline double h_norm(const RadialCoeffs& u) {
  double sum = 0.0;
  for (int k = 0; k < u.c.size(); ++k) sum += u.basis->symbol(k) * u.c(k) * u.c(k);
  return std::sqrt(sum);
}

/// Share of the H-norm carried by the upper half of the modes; a truncation monitor.
inline double h_norm_tail_fraction(const RadialCoeffs& u) {
  double total = 0.0, tail = 0.0;
  const int K = static_cast<int>(u.c.size());
  for (int k = 0; k < K; ++k) {
    const double e = u.basis->symbol(k) * u.c(k) * u.c(k);
    total += e;
    if (k >= K / 2) tail += e;
  }
  return total > 0.0 ? tail / total : 0.0;
}

/// Gram matrix int phi_j phi_k dx under the basis quadrature.
inline Eigen::MatrixXd gram_matrix(const BallBasis& basis) {
  const Eigen::Map<const Eigen::VectorXd> w(basis.quad_weights().data(), static_cast<Eigen::Index>(basis.quad_weights().size()));
  return basis.node_values().transpose() * w.asDiagonal() * basis.node_values();
}

}  // namespace fracgelfand
