#pragma once

// Canonical extension of a radial trace u = sum b_k phi_k to the half
// cylinder B_1 x (0, inf):  v(rho, y) = sum b_k phi_k(rho) g_k(y), where
// g_k(y) = 2^{1-s}/Gamma(s) (sqrt(mu_k) y)^s K_s(sqrt(mu_k) y) solves the
// degenerate Bessel ODE with g_k(0) = 1 and g_k(inf) = 0.
//
// Also here: the flux constant, energy and weighted integrals over the
// cylinder, and the whole-space kernels used for pointwise comparison.

#include "fracgelfand/quadrature.hpp"
#include "fracgelfand/spectral_ball.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

namespace fracgelfand {

namespace detail {

inline void require_fractional(double s) {
  if (!(s > 0.0 && s < 1.0)) throw DomainError("the cylinder extension needs s in (0,1), got " + std::to_string(s));
}

/// Quintic smoothstep: 0 for t <= 0, 1 for t >= 1, C^2 in between.
inline double smoothstep(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}
inline double smoothstep_slope(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  return 30.0 * t * t * (1.0 - t) * (1.0 - t);
}

/// Composite Gauss-Legendre rule on [lo, hi] whose panels halve toward `lo`
/// `levels` times and are never wider than `max_width`. With `skip_first`
/// the innermost panel [lo, lo + (hi - lo) 2^{-levels}] is left out.
inline quadrature::Rule graded_rule(double lo, double hi, int levels, double max_width, int per_panel = 20, bool skip_first = false) {
  std::vector<double> geo = quadrature::graded_edges(lo, hi, levels, 0.5, 1);
  if (skip_first) geo.erase(geo.begin());
  std::vector<double> edges{geo.front()};
  for (std::size_t i = 1; i < geo.size(); ++i) {
    const double a = geo[i - 1], b = geo[i];
    const int pieces = std::max(1, static_cast<int>(std::ceil((b - a) / max_width)));
    for (int p = 1; p <= pieces; ++p) edges.push_back(a + (b - a) * p / pieces);
  }
  return quadrature::composite(edges, per_panel);
}

/// Composite rule with a fixed panel width cap over consecutive breakpoints.
inline quadrature::Rule piecewise_rule(const std::vector<double>& breaks, double max_width, int per_panel = 20) {
  std::vector<double> edges{breaks.front()};
  for (std::size_t i = 1; i < breaks.size(); ++i) {
    const double a = breaks[i - 1], b = breaks[i];
    if (!(b > a)) continue;
    const int pieces = std::max(1, static_cast<int>(std::ceil((b - a) / max_width)));
    for (int p = 1; p <= pieces; ++p) edges.push_back(a + (b - a) * p / pieces);
  }
  return quadrature::composite(edges, per_panel);
}

}  // namespace detail

/// c_{n,s} = 2^{1-2s} Gamma(1-s) / Gamma(s); depends on s only.
inline double flux_constant(double s) {
  detail::require_fractional(s);
  return std::pow(2.0, 1.0 - 2.0 * s) * specfun::gamma(1.0 - s) / specfun::gamma(s);
}

/// g_k(y) for 0-based mode k; g_k(0) = 1.
inline double profile(const BallBasis& basis, int k, double y) {
  const double s = basis.order();
  detail::require_fractional(s);
  if (y < 0.0) throw DomainError("profile: y must be nonnegative");
  if (y == 0.0) return 1.0;
  const double x = std::sqrt(basis.eigenvalues()[static_cast<std::size_t>(k)]) * y;
  if (x > 700.0) return 0.0;
  return std::pow(2.0, 1.0 - s) / specfun::gamma(s) * std::pow(x, s) * specfun::bessel_k(s, x);
}

/// g_k'(y) = -2^{1-s}/Gamma(s) a (a y)^s K_{1-s}(a y), a = sqrt(mu_k).
inline double profile_derivative(const BallBasis& basis, int k, double y) {
  const double s = basis.order();
  detail::require_fractional(s);
  if (!(y > 0.0)) throw DomainError("profile_derivative: y must be positive");
  const double a = std::sqrt(basis.eigenvalues()[static_cast<std::size_t>(k)]);
  const double x = a * y;
  if (x > 700.0) return 0.0;
  return -std::pow(2.0, 1.0 - s) / specfun::gamma(s) * a * std::pow(x, s) * specfun::bessel_k(1.0 - s, x);
}

struct FluxEstimate {
  double value = 0.0;
  double error = 0.0;  ///< change when the highest extrapolation term is dropped
};

/// Numerical limit of -y^{1-2s} g_k'(y) / mu_k^s as y -> 0+.
///
/// g_k' comes from fourth-order central differences of g_k at y = x / a_k,
/// x = 0.05 * 2^{-i}, i = 0..9. The samples are fitted by the small-y
/// expansion  L + sum_e a_e x^e  with e in {2-2s, 2, 4-2s, 4, 6-2s}.
inline FluxEstimate flux_constant_numeric(const BallBasis& basis, int k) {
  const double s = basis.order();
  detail::require_fractional(s);
  const double a = std::sqrt(basis.eigenvalues()[static_cast<std::size_t>(k)]);
  const double mu_s = std::pow(a, 2.0 * s);
  constexpr int samples = 10;
  constexpr double rel_step = 1e-2;
  const std::vector<double> exponents{2.0 - 2.0 * s, 2.0, 4.0 - 2.0 * s, 4.0, 6.0 - 2.0 * s};

  Eigen::VectorXd xs(samples), q(samples);
  for (int i = 0; i < samples; ++i) {
    const double x = 0.05 * std::ldexp(1.0, -i);
    const double y = x / a, h = rel_step * y;
    const auto g = [&](double yy) { return profile(basis, k, yy); };
    const double dg = (g(y - 2 * h) - 8 * g(y - h) + 8 * g(y + h) - g(y + 2 * h)) / (12 * h);
    xs(i) = x;
    q(i) = -std::pow(y, 1.0 - 2.0 * s) * dg / mu_s;
  }
  const auto fit = [&](std::size_t terms) {
    Eigen::MatrixXd M(samples, static_cast<Eigen::Index>(terms + 1));
    for (int i = 0; i < samples; ++i) {
      M(i, 0) = 1.0;
      for (std::size_t e = 0; e < terms; ++e) M(i, static_cast<Eigen::Index>(e + 1)) = std::pow(xs(i), exponents[e]);
    }
    return M.colPivHouseholderQr().solve(q)(0);
  };
  FluxEstimate est;
  est.value = fit(exponents.size());
  est.error = std::abs(est.value - fit(exponents.size() - 1));
  if (!std::isfinite(est.value) || est.error > 1e-6 * std::abs(est.value))
    throw ConvergenceError("flux_constant_numeric: extrapolation did not settle (change " + std::to_string(est.error) + ")");
  return est;
}

/// Whole-space Poisson normalization Gamma((n+2-2s)/2) / (pi^{n/2} Gamma(1-s)).
inline double poisson_constant(double n, double s) {
  detail::require_fractional(s);
  if (n < 2.0) throw DomainError("poisson_constant: n must be >= 2");
  return specfun::gamma(0.5 * (n + 2.0 - 2.0 * s)) / (std::pow(std::numbers::pi, 0.5 * n) * specfun::gamma(1.0 - s));
}

/// int_{R^n} (1 + |z|^2)^{-(n+2-2s)/2} dz by radial quadrature.
inline double poisson_normalization_integral(double n, double s) {
  detail::require_fractional(s);
  const double p = 0.5 * (n + 2.0 - 2.0 * s);
  const auto radial = [&](double r) {
    if (r == 0.0) return n == 1.0 ? 1.0 : 0.0;
    return std::exp((n - 1.0) * std::log(r) - p * std::log1p(r * r));
  };
  return sphere_area(n) * (quadrature::tanh_sinh(radial, 0.0, 1.0, 1e-13).value + quadrature::exp_sinh(radial, 1.0, 1e-13).value);
}

/// Constant of the Riesz kernel of (-Delta)^{-s} on R^n:
/// Gamma(n/2 - s) / (4^s pi^{n/2} Gamma(s)); equals flux_constant * poisson_constant / (n - 2s).
inline double riesz_kernel_constant(double n, double s) {
  detail::require_fractional(s);
  if (!(n > 2.0 * s)) throw DomainError("riesz_kernel_constant: n must exceed 2s");
  return specfun::gamma(0.5 * n - s) / (std::pow(4.0, s) * std::pow(std::numbers::pi, 0.5 * n) * specfun::gamma(s));
}

/// int_{B_1} |h(|z|)| / |x - z|^{n-2s} dz with |x| = x_mag.
///
/// The angle toward x is integrated innermost; the radial integral is split
/// at r = x_mag so that the integrable diagonal singularity sits at an
/// endpoint of both pieces, where tanh-sinh clusters its nodes.
inline double riesz_potential_radial(const std::function<double(double)>& h, int n, double s, double x_mag, double tol = 1e-10) {
  detail::require_fractional(s);
  if (!(x_mag >= 0.0 && x_mag <= 1.0)) throw DomainError("riesz_potential_radial: |x| must lie in [0,1]");
  const double p = 0.5 * (n - 2.0 * s);
  const double a = x_mag;
  if (a == 0.0) {
    const auto f = [&](double r) { return std::abs(h(r)) * std::pow(r, 2.0 * s - 1.0); };
    return sphere_area(n) * quadrature::tanh_sinh(f, 0.0, 1.0, tol).value;
  }
  const auto angular = [&](double r) {
    const auto g = [&](double theta) {
      const double half = std::sin(0.5 * theta);
      const double d2 = (r - a) * (r - a) + 4.0 * a * r * half * half;
      if (d2 <= 0.0) return 0.0;
      // As a product the two powers under- and overflow separately for large n.
      return std::exp((n - 2) * std::log(std::sin(theta)) - p * std::log(d2));
    };
    return quadrature::tanh_sinh(g, 0.0, std::numbers::pi, tol).value;
  };
  const auto outer = [&](double r) {
    if (std::abs(r - a) <= 1e-15 * a) return 0.0;
    const double hv = std::abs(h(r));
    if (hv == 0.0) return 0.0;
    return hv * std::pow(r, n - 1) * angular(r);
  };
  double total = quadrature::tanh_sinh(outer, 0.0, a, tol).value;
  if (a < 1.0) total += quadrature::tanh_sinh(outer, a, 1.0, tol).value;
  return sphere_area(n - 1) * total;
}

inline double riesz_potential_radial(const RadialCoeffs& h, double x_mag, double tol = 1e-10) {
  return riesz_potential_radial([&](double r) { return eval(h, r); }, h.basis->dim(), h.basis->order(), x_mag, tol);
}

/// Weight exponent and cutoff parameters of eta = rho^{1-alpha} zeta_eps(rho) psi_R(y).
struct CutoffSpec {
  double alpha = 1.0;
  double epsilon = 1e-3;
  double R = 2.0;
};

/// zeta_eps: 0 on [0, eps], rises to 1 on [eps, 2 eps], 1 on [2 eps, 1/2], falls to 0 on [1/2, 3/4].
inline double inner_cutoff(double eps, double rho) {
  if (rho <= 0.5) return detail::smoothstep((rho - eps) / eps);
  return 1.0 - detail::smoothstep((rho - 0.5) / 0.25);
}
inline double inner_cutoff_slope(double eps, double rho) {
  if (rho <= 0.5) return detail::smoothstep_slope((rho - eps) / eps) / eps;
  return -detail::smoothstep_slope((rho - 0.5) / 0.25) / 0.25;
}
/// psi_R: 1 on [0, R], falls to 0 on [R, R+1].
inline double vertical_cutoff(double R, double y) { return 1.0 - detail::smoothstep(y - R); }
inline double vertical_cutoff_slope(double R, double y) { return -detail::smoothstep_slope(y - R); }

struct WeightedIntegral {
  double value = 0.0;
  double change = 0.0;  ///< difference between two grading depths
  bool diverged = false;
};

struct InequalitySides {
  double lhs = 0.0;
  double rhs = 0.0;
  double margin() const { return lhs - rhs; }
};

/// v(rho, y) = sum b_k phi_k(rho) g_k(y) for a trace u given by its coefficients.
class ExtensionField {
 public:
  explicit ExtensionField(RadialCoeffs u) : u_(std::move(u)) { detail::require_fractional(u_.basis->order()); }

  const RadialCoeffs& trace() const { return u_; }
  const BallBasis& basis() const { return *u_.basis; }
  double flux_const() const { return flux_constant(basis().order()); }

  double value(double rho, double y) const {
    double sum = 0.0;
    for (int k = 0; k < u_.c.size(); ++k)
      if (u_.c(k) != 0.0) sum += u_.c(k) * basis().phi(k, rho) * profile(basis(), k, y);
    return sum;
  }
  double d_rho(double rho, double y) const {
    double sum = 0.0;
    for (int k = 0; k < u_.c.size(); ++k)
      if (u_.c(k) != 0.0) sum += u_.c(k) * basis().dphi(k, rho) * profile(basis(), k, y);
    return sum;
  }
  double d_y(double rho, double y) const {
    double sum = 0.0;
    for (int k = 0; k < u_.c.size(); ++k)
      if (u_.c(k) != 0.0) sum += u_.c(k) * basis().phi(k, rho) * profile_derivative(basis(), k, y);
    return sum;
  }

  /// Mode-pair integrals int w(y) y^{1-2s} p_j(y) p_k(y) dy over a rule, where
  /// p is g or g' and w an optional vertical weight.
  Eigen::MatrixXd vertical_gram(const quadrature::Rule& rule, bool derivative, const std::function<double(double)>& weight = {}) const {
    const int K = basis().modes();
    const double s = basis().order();
    Eigen::MatrixXd P(static_cast<Eigen::Index>(rule.size()), K);
    Eigen::VectorXd w(static_cast<Eigen::Index>(rule.size()));
    for (std::size_t i = 0; i < rule.size(); ++i) {
      const double y = rule.nodes[i];
      const auto r = static_cast<Eigen::Index>(i);
      const double wy = weight ? weight(y) : 1.0;
      w(r) = rule.weights[i] * std::pow(y, 1.0 - 2.0 * s) * wy;
      for (int k = 0; k < K; ++k) P(r, k) = derivative ? profile_derivative(basis(), k, y) : profile(basis(), k, y);
    }
    return P.transpose() * w.asDiagonal() * P;
  }

  /// Mode-pair integrals |S^{n-1}| int w(rho) rho^{n-1} phi_j'(rho) phi_k'(rho) d rho.
  Eigen::MatrixXd radial_gram(const quadrature::Rule& rule, const std::function<double(double)>& weight, bool derivative = true) const {
    const int K = basis().modes();
    const int n = basis().dim();
    Eigen::MatrixXd P(static_cast<Eigen::Index>(rule.size()), K);
    Eigen::VectorXd w(static_cast<Eigen::Index>(rule.size()));
    for (std::size_t i = 0; i < rule.size(); ++i) {
      const double r = rule.nodes[i];
      const auto row = static_cast<Eigen::Index>(i);
      w(row) = rule.weights[i] * std::pow(r, n - 1) * basis().sphere() * weight(r);
      for (int k = 0; k < K; ++k) P(row, k) = derivative ? basis().dphi(k, r) : basis().phi(k, r);
    }
    return P.transpose() * w.asDiagonal() * P;
  }

  /// Nodes on (0, Y] for vertical integrals: Y = 40/sqrt(mu_1), geometric
  /// refinement toward y = 0, and panels no wider than 2/sqrt(mu_1).
  quadrature::Rule vertical_rule(int levels = 60) const {
    const double a1 = std::sqrt(basis().eigenvalues()[0]);
    return detail::graded_rule(0.0, 40.0 / a1, levels, 2.0 / a1);
  }

 private:
  RadialCoeffs u_;
};

/// -d/dy log v(0, y) from a least-squares line through samples on [y_lo, y_hi].
inline double axial_decay_rate(const ExtensionField& v, double y_lo = 2.0, double y_hi = 10.0, int samples = 33) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double y = y_lo + (y_hi - y_lo) * i / (samples - 1);
    const double val = v.value(0.0, y);
    if (!(val > 0.0)) throw DomainError("axial_decay_rate: v(0, y) must be positive on the fit range");
    const double l = std::log(val);
    sx += y;
    sy += l;
    sxx += y * y;
    sxy += y * l;
  }
  const double m = samples;
  return -(m * sxy - sx * sy) / (m * sxx - sx * sx);
}

/// int_C y^{1-2s} |grad v|^2 dx dy by tensor quadrature: radial Gauss-Legendre
/// nodes of the basis times a vertical rule graded toward y = 0.
inline double extension_energy(const ExtensionField& v, int levels = 60) {
  const RadialCoeffs& u = v.trace();
  if (u.c.isZero(0.0)) return 0.0;
  const BallBasis& b = v.basis();
  const quadrature::Rule yr = v.vertical_rule(levels);
  const Eigen::MatrixXd Gy = v.vertical_gram(yr, false);
  const Eigen::MatrixXd Hy = v.vertical_gram(yr, true);

  const auto nodes = b.quad_nodes();
  const auto weights = b.quad_weights();
  Eigen::MatrixXd D(static_cast<Eigen::Index>(nodes.size()), b.modes());
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (int k = 0; k < b.modes(); ++k) D(static_cast<Eigen::Index>(i), k) = b.dphi(k, nodes[i]);
  const Eigen::Map<const Eigen::VectorXd> w(weights.data(), static_cast<Eigen::Index>(weights.size()));
  const Eigen::MatrixXd Dx = D.transpose() * w.asDiagonal() * D;
  const Eigen::MatrixXd Mx = gram_matrix(b);

  const Eigen::MatrixXd E = Dx.cwiseProduct(Gy) + Mx.cwiseProduct(Hy);
  return u.c.dot(E * u.c);
}

namespace detail {

// phi_k'(rho) ~ d_k rho near the axis, d_k = -N_k j_k^{nu+2} 2^{-(nu+1)} / Gamma(nu+2).
inline Eigen::VectorXd axis_slopes(const BallBasis& b) {
  Eigen::VectorXd d(b.modes());
  const double nu = b.bessel_order();
  for (int k = 0; k < b.modes(); ++k) {
    const double j = b.bessel_zeros()[static_cast<std::size_t>(k)];
    d(k) = -b.norm_consts()[static_cast<std::size_t>(k)] * std::pow(j, nu + 2.0) * std::pow(2.0, -(nu + 1.0)) / specfun::gamma(nu + 2.0);
  }
  return d;
}

inline double max_panel_width(const BallBasis& b) {
  return std::min(0.05, 4.0 / b.bessel_zeros().back());
}

}  // namespace detail

/// int_{rho <= 1/2} y^{1-2s} v_rho^2 rho^{-2 alpha} dx dy.
///
/// Radial panels are refined geometrically toward the axis down to rho_min;
/// on (0, rho_min) v_rho is replaced by its linear behaviour, so the
/// integrand rho^{n+1-2 alpha} integrates in closed form. The value is
/// computed at two refinement depths; `change` reports their difference.
inline WeightedIntegral weighted_vrho_integral(const ExtensionField& v, const CutoffSpec& spec) {
  WeightedIntegral out;
  const BallBasis& b = v.basis();
  const double expo = b.dim() + 2.0 - 2.0 * spec.alpha;
  if (expo <= 0.0) {
    out.diverged = true;
    out.value = std::numeric_limits<double>::infinity();
    return out;
  }
  const RadialCoeffs& u = v.trace();
  if (u.c.isZero(0.0)) return out;
  const Eigen::MatrixXd Gy = v.vertical_gram(v.vertical_rule(), false);
  const Eigen::VectorXd d = detail::axis_slopes(b);
  const double width = detail::max_panel_width(b);
  const auto at_depth = [&](int levels) {
    const quadrature::Rule rr = detail::graded_rule(0.0, 0.5, levels, width, 20, true);
    const double rho_min = std::ldexp(0.5, -levels);
    const Eigen::MatrixXd R = v.radial_gram(rr, [&](double r) { return std::pow(r, -2.0 * spec.alpha); });
    const Eigen::MatrixXd T = (b.sphere() * std::pow(rho_min, expo) / expo) * d * d.transpose();
    return u.c.dot((R + T).cwiseProduct(Gy) * u.c);
  };
  const double coarse = at_depth(30);
  out.value = at_depth(45);
  out.change = std::abs(out.value - coarse);
  out.diverged = !std::isfinite(out.value) || out.change > 1e-6 * std::abs(out.value);
  return out;
}

/// Both sides of the stability inequality
///   int y^{1-2s} v_rho^2 |grad eta|^2  >=  (n-1) int y^{1-2s} v_rho^2 eta^2 / rho^2
/// for eta = rho^{1-alpha} zeta_eps(rho) psi_R(y).
inline InequalitySides stability_weighted_inequality(const ExtensionField& v, const CutoffSpec& spec) {
  InequalitySides out;
  const BallBasis& b = v.basis();
  const double eps = spec.epsilon, al = spec.alpha;
  if (eps >= 0.75 || v.trace().c.isZero(0.0)) return out;
  if (!(eps > 0.0 && spec.R > 0.0)) throw DomainError("stability_weighted_inequality: epsilon and R must be positive");

  const auto amp = [&](double r) { return std::pow(r, 1.0 - al) * inner_cutoff(eps, r); };
  const auto amp_slope = [&](double r) {
    return (1.0 - al) * std::pow(r, -al) * inner_cutoff(eps, r) + std::pow(r, 1.0 - al) * inner_cutoff_slope(eps, r);
  };
  const double hi = std::min(2.0 * eps, 0.5);
  const quadrature::Rule rr = detail::piecewise_rule({eps, hi, 0.5, 0.75}, std::min(detail::max_panel_width(b), eps));
  const Eigen::MatrixXd R_slope = v.radial_gram(rr, [&](double r) { return amp_slope(r) * amp_slope(r); });
  const Eigen::MatrixXd R_amp = v.radial_gram(rr, [&](double r) { return amp(r) * amp(r); });
  const Eigen::MatrixXd R_hardy = v.radial_gram(rr, [&](double r) { return amp(r) * amp(r) / (r * r); });

  const double a1 = std::sqrt(b.eigenvalues()[0]);
  const double top = spec.R + 1.0;
  quadrature::Rule yr = detail::graded_rule(0.0, std::min(spec.R, top), 60, std::min(2.0 / a1, 0.25));
  const quadrature::Rule ramp = quadrature::composite({spec.R, spec.R + 0.5, top}, 20);
  yr.nodes.insert(yr.nodes.end(), ramp.nodes.begin(), ramp.nodes.end());
  yr.weights.insert(yr.weights.end(), ramp.weights.begin(), ramp.weights.end());
  const double R = spec.R;
  const Eigen::MatrixXd Y_cut = v.vertical_gram(yr, false, [&](double y) { return std::pow(vertical_cutoff(R, y), 2); });
  const Eigen::MatrixXd Y_slope = v.vertical_gram(yr, false, [&](double y) { return std::pow(vertical_cutoff_slope(R, y), 2); });

  const Eigen::VectorXd& c = v.trace().c;
  out.lhs = c.dot((R_slope.cwiseProduct(Y_cut) + R_amp.cwiseProduct(Y_slope)) * c);
  out.rhs = (b.dim() - 1.0) * c.dot(R_hardy.cwiseProduct(Y_cut) * c);
  return out;
}

}  // namespace fracgelfand
