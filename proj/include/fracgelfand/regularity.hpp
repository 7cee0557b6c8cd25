#pragma once

// Quantitative side of the regularity theory for extremal solutions: the
// critical dimension and the decay exponent, log-log fits near the origin
// and the boundary, the constant A_{n,s,beta} of the weighted estimate,
// weighted f-integrals and the pointwise bounds they imply.

#include "fracgelfand/extension.hpp"
#include "fracgelfand/nonlinearity.hpp"
#include "fracgelfand/quadrature.hpp"
#include "fracgelfand/spectral_ball.hpp"

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

namespace fracgelfand {

/// Dimension below which extremal solutions are bounded: 2(s + 2 + sqrt(2(s+1))).
inline double critical_dimension(double s) {
  if (!(s > 0.0 && s <= 1.0)) throw DomainError("critical_dimension: s must lie in (0,1], got " + std::to_string(s));
  return 2.0 * (s + 2.0 + std::sqrt(2.0 * (s + 1.0)));
}

/// Upper end n/2 - 1 - sqrt(n-1) - s of the admissible singular decay exponents.
inline double decay_exponent_bound(double n, double s) {
  if (!(n >= 2.0)) throw DomainError("decay_exponent_bound: n must be at least 2");
  return 0.5 * n - 1.0 - std::sqrt(n - 1.0) - s;
}

/// Least-squares fit log u = log C - mu log rho.
struct DecayFit {
  double mu = 0.0;
  double C = 0.0;
  double r2 = 1.0;
};

inline DecayFit fit_power_law(const std::vector<double>& x, const std::vector<double>& u) {
  if (x.size() != u.size() || x.size() < 2) throw DomainError("power-law fit needs at least two samples");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(u[i] > 0.0) || !(x[i] > 0.0)) throw DomainError("power-law fit: nonpositive sample " + std::to_string(u[i]) + " at " + std::to_string(x[i]));
    const double lx = std::log(x[i]), ly = std::log(u[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    syy += ly * ly;
  }
  const double m = static_cast<double>(x.size());
  const double vx = sxx - sx * sx / m, vy = syy - sy * sy / m, cxy = sxy - sx * sy / m;
  if (!(vx > 0.0)) throw DomainError("power-law fit: sample abscissae coincide");
  const double slope = cxy / vx;
  DecayFit fit;
  fit.mu = -slope;
  fit.C = std::exp((sy - slope * sx) / m);
  fit.r2 = vy > 0.0 ? cxy * cxy / (vx * vy) : 1.0;
  return fit;
}

inline std::vector<double> log_grid(double lo, double hi, int count) {
  if (!(lo > 0.0 && hi > lo) || count < 2) throw DomainError("log_grid: need 0 < lo < hi and at least two points");
  std::vector<double> x(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) x[static_cast<std::size_t>(i)] = lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1));
  return x;
}

inline DecayFit fit_decay_exponent(const std::function<double(double)>& u, std::pair<double, double> rho_range, int samples = 200) {
  const auto x = log_grid(rho_range.first, rho_range.second, samples);
  std::vector<double> v(x.size());
  std::transform(x.begin(), x.end(), v.begin(), u);
  return fit_power_law(x, v);
}

inline DecayFit fit_decay_exponent(const RadialCoeffs& u, std::pair<double, double> rho_range, int samples = 200) {
  return fit_decay_exponent([&](double r) { return eval(u, r); }, rho_range, samples);
}

/// max u(rho) rho^mu over a log grid of rho_range: the smallest C with u <= C rho^{-mu} there.
inline double envelope_constant(const std::function<double(double)>& u, double mu, std::pair<double, double> rho_range, int samples = 400) {
  double C = 0.0;
  for (double r : log_grid(rho_range.first, rho_range.second, samples)) C = std::max(C, u(r) * std::pow(r, mu));
  return C;
}

/// Exponent of u(rho) against dist = 1 - rho, fitted on rho in [0.99, 0.9999].
inline double boundary_decay_rate(const std::function<double(double)>& u, int samples = 100) {
  return -fit_decay_exponent([&](double d) { return u(1.0 - d); }, {1e-4, 1e-2}, samples).mu;
}

inline double boundary_decay_rate(const RadialCoeffs& u, int samples = 100) {
  return boundary_decay_rate([&](double r) { return eval(u, r); }, samples);
}

/// Truncated eigen-series of the torsion function (-Delta)^{-s} 1 with the
/// coefficients in closed form,
///   sum_k 2 J_nu(j_k rho) / (rho^nu j_k^{1+2s} J_{nu+1}(j_k)),
/// so that tens of thousands of modes are affordable near the boundary.
class TorsionSeries {
 public:
  TorsionSeries(int n, double s, int modes) : nu_(0.5 * n - 1.0) {
    if (n < 2 || !(s > 0.0 && s <= 1.0) || modes < 1) throw DomainError("TorsionSeries: need n >= 2, s in (0,1], modes >= 1");
    zeros_ = specfun::bessel_j_zeros(specfun::BesselOrder(nu_), modes);
    coef_.resize(zeros_.size());
    for (std::size_t k = 0; k < zeros_.size(); ++k) {
      const double j = zeros_[k];
      coef_[k] = 2.0 / (std::pow(j, 1.0 + 2.0 * s) * specfun::bessel_j(specfun::BesselOrder(nu_ + 1.0), j));
    }
  }

  double operator()(double rho) const {
    const specfun::BesselOrder order(nu_);
    double sum = 0.0;
    for (std::size_t k = 0; k < zeros_.size(); ++k) {
      const double j = zeros_[k];
      sum += coef_[k] * std::pow(j, nu_) * specfun::scaled_bessel_j(order, j * rho);
    }
    return sum;
  }

 private:
  double nu_;
  std::vector<double> zeros_, coef_;
};

/// Quadrature value of A_{n,s,beta} at two refinement levels.
struct AConstant {
  double value = 0.0;
  double change = 0.0;  ///< relative difference between the refinements
  bool converged() const { return change < 1e-4; }
};

namespace detail {

inline std::vector<double> halving_edges(double a, int levels) {
  std::vector<double> e{0.0};
  for (int i = levels; i >= 0; --i) e.push_back(std::ldexp(a, -i));
  return e;
}

// In polar coordinates (R, phi) of the (|x|, y) quarter plane and the angle
// theta between x and e, |X - E|^2 = (R-1)^2 + 2R(1 - cos phi cos theta) and
// the integrand factors into R^{n+1-2s-beta} times an angular integral that
// peaks at phi = theta = 0 on the scale |R - 1|.
inline double a_constant_at(double n, double s, double beta, int per_panel, int extra) {
  constexpr double pi = std::numbers::pi;
  const double p = 0.5 * (n + 2.0 - 2.0 * s);
  // Angular integral of (a + b (1 - cos phi cos theta))^{-p}; (a, b) is
  // ((R-1)^2, 2R), or that pair times T^2 = R^{-2} on the far side.
  const auto angular_ab = [&](double R, double a_gap, double b_scale) {
    const int levels = std::clamp(static_cast<int>(std::ceil(-std::log2(std::max(std::abs(R - 1.0), 1e-14)))) + extra, extra, 48);
    const quadrature::Rule rp = quadrature::composite(halving_edges(pi / 2, levels), per_panel);
    const quadrature::Rule rt = quadrature::composite(halving_edges(pi, levels + 1), per_panel);
    std::vector<double> cp(rp.size()), hp(rp.size()), wp(rp.size()), ht(rt.size()), wt(rt.size());
    for (std::size_t i = 0; i < rp.size(); ++i) {
      const double a = rp.nodes[i];
      cp[i] = std::cos(a);
      hp[i] = 2.0 * std::pow(std::sin(0.5 * a), 2);
      wp[i] = rp.weights[i] * std::pow(std::sin(a), 3.0 - 2.0 * s) * std::pow(cp[i], n - 1.0);
    }
    for (std::size_t j = 0; j < rt.size(); ++j) {
      const double t = rt.nodes[j];
      ht[j] = 2.0 * std::pow(std::sin(0.5 * t), 2);
      wt[j] = rt.weights[j] * std::pow(std::sin(t), n - 2.0);
    }
    double total = 0.0;
    for (std::size_t i = 0; i < rp.size(); ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < rt.size(); ++j) row += wt[j] * std::pow(a_gap + b_scale * (hp[i] + cp[i] * ht[j]), -p);
      total += wp[i] * row;
    }
    return total;
  };
  const auto angular = [&](double R) { return angular_ab(R, (R - 1.0) * (R - 1.0), 2.0 * R); };

  // Near R = 0 and R = inf the kernel |X - E| is frozen, so the angular
  // integral tends to ang0 and both ends contribute closed-form power tails.
  double ang0 = 0.0;
  {
    const quadrature::Rule rp = quadrature::composite({0.0, pi / 4, pi / 2}, 2 * per_panel);
    const quadrature::Rule rt = quadrature::composite({0.0, pi / 2, pi}, 2 * per_panel);
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < rp.size(); ++i) a += rp.weights[i] * std::pow(std::sin(rp.nodes[i]), 3.0 - 2.0 * s) * std::pow(std::cos(rp.nodes[i]), n - 1.0);
    for (std::size_t j = 0; j < rt.size(); ++j) b += rt.weights[j] * std::pow(std::sin(rt.nodes[j]), n - 2.0);
    ang0 = a * b;
  }

  const double expo = n + 1.0 - 2.0 * s - beta;
  const int depth = 40 + extra;
  const double end = std::ldexp(0.5, -depth);
  // [end, 1): halving toward 0 on [0, 1/2] and toward 1 on [1/2, 1). Edges
  // closer to 1 than 2^-36 would be lost in rounding.
  std::vector<double> inner = halving_edges(0.5, depth);
  inner.erase(inner.begin());
  for (int k = 2; k <= 36; ++k) inner.push_back(1.0 - std::ldexp(1.0, -k));
  inner.push_back(1.0);
  std::vector<double> outer{1.0};
  for (int k = 36; k >= 0; --k) outer.push_back(1.0 + std::ldexp(1.0, -k));

  double total = ang0 * std::pow(end, expo + 1.0) / (expo + 1.0) + ang0 * std::pow(end, beta) / beta;
  for (const auto& edges : {inner, outer}) {
    const quadrature::Rule r = quadrature::composite(edges, per_panel);
    for (std::size_t i = 0; i < r.size(); ++i) total += r.weights[i] * std::pow(r.nodes[i], expo) * angular(r.nodes[i]);
  }
  // R > 2 through T = 1/R: R^expo dR = T^{-expo-2} dT, and T^{2p} moves
  // into the kernel, leaving T^{beta-1} (the separate factors overflow for
  // large n).
  std::vector<double> far = halving_edges(0.5, depth);
  far.erase(far.begin());
  const quadrature::Rule tail = quadrature::composite(far, per_panel);
  for (std::size_t i = 0; i < tail.size(); ++i) {
    const double T = tail.nodes[i];
    total += tail.weights[i] * std::pow(T, beta - 1.0) * angular_ab(1.0 / T, (1.0 - T) * (1.0 - T), 2.0 * T);
  }
  return sphere_area(n - 1.0) * total;
}

}  // namespace detail

/// A_{n,s,beta} = int over R^n x (0,inf) of
///   y^{3-2s} / ((|x|^2 + y^2)^{(beta+2)/2} (y^2 + |x - e|^2)^{(n+2-2s)/2}).
/// Non-integer n is accepted; n only enters through exponents and |S^{n-2}|.
inline AConstant a_constant(double n, double s, double beta) {
  detail::require_fractional(s);
  if (!(n >= 2.0)) throw DomainError("a_constant: n must be at least 2");
  if (!(beta > 0.0 && beta < n)) throw DomainError("a_constant: beta must lie in (0, n)");
  AConstant a;
  const double coarse = detail::a_constant_at(n, s, beta, 8, 4);
  a.value = detail::a_constant_at(n, s, beta, 12, 8);
  a.change = std::abs(a.value - coarse) / a.value;
  return a;
}

/// 1 - beta C_{n,s} A_{n,s,beta}; throws when the quadrature did not converge.
inline double lemma_a_margin(double n, double s, double beta) {
  const AConstant a = a_constant(n, s, beta);
  if (!a.converged()) throw ConvergenceError("A-constant quadrature changed by " + std::to_string(a.change) + " under refinement");
  return 1.0 - beta * poisson_constant(n, s) * a.value;
}

/// Largest beta for which some admissible alpha < 1 + sqrt(n-1) has 2(beta + s - alpha) < n.
inline double weighted_beta_limit(int n, double s) { return 0.5 * n - s + 1.0 + std::sqrt(n - 1.0); }

/// int_{B_1} f(u) |x|^{-beta} dx. The radial panels halve toward the origin;
/// below rho_min, f(u) is frozen at f(u(0)). Two depths give `change`.
inline WeightedIntegral weighted_f_integral(const RadialCoeffs& u, const Nonlinearity& f, double beta) {
  const BallBasis& b = *u.basis;
  const int n = b.dim();
  if (!(beta >= 0.0)) throw DomainError("weighted_f_integral: beta must be nonnegative");
  if (!(beta < weighted_beta_limit(n, b.order())))
    throw DomainError("weighted_f_integral: beta = " + std::to_string(beta) + " admits no alpha with 2(beta + s - alpha) < n");
  WeightedIntegral out;
  const double expo = n - beta;
  if (expo <= 0.0) {
    out.diverged = true;
    out.value = std::numeric_limits<double>::infinity();
    return out;
  }
  const double f0 = f(eval(u, 0.0));
  const double width = detail::max_panel_width(b);
  const auto at_depth = [&](int levels) {
    const quadrature::Rule r = detail::graded_rule(0.0, 1.0, levels, width, 20, true);
    const double rho_min = std::ldexp(1.0, -levels);
    double total = f0 * std::pow(rho_min, expo) / expo;
    for (std::size_t i = 0; i < r.size(); ++i) total += r.weights[i] * f(eval(u, r.nodes[i])) * std::pow(r.nodes[i], expo - 1.0);
    return b.sphere() * total;
  };
  const double coarse = at_depth(30);
  out.value = at_depth(45);
  out.change = std::abs(out.value - coarse);
  out.diverged = !std::isfinite(out.value) || out.change > 1e-6 * std::abs(out.value);
  return out;
}

/// int_{B_{2 rho} \ B_rho} |x|^{-beta} dx = |S^{n-1}| (2^{n-beta} - 1) rho^{n-beta} / (n - beta).
inline double annulus_weight(int n, double beta, double rho) {
  if (!(beta < n)) throw DomainError("annulus_weight: beta must be below n");
  return sphere_area(n) * (std::pow(2.0, n - beta) - 1.0) * std::pow(rho, n - beta) / (n - beta);
}

struct Step2Check {
  double integral = 0.0;       ///< int_{B_1} f(u) |x|^{-beta}
  double max_violation = 0.0;  ///< max over rho of (annulus(rho) f(u(rho)) - integral)_+ / integral
  double worst_rho = 0.0;
};

enum class Annulus {
  Inner,  ///< B_rho \ B_{rho/2}, rho in (0, 1]: u >= u(rho) there, so the bound always holds
  Outer,  ///< B_{2 rho} \ B_rho, rho in (0, 1/2]
};

/// Checks f(u(rho)) int_{annulus(rho)} |x|^{-beta} <= int_{B_1} f(u)|x|^{-beta}.
///
/// Only the inner annulus is covered by monotonicity: on the outer one u
/// lies below u(rho), and for a profile that drops steeply toward the
/// boundary the outer version fails by a fixed fraction.
inline Step2Check step2_pointwise_bound(const RadialCoeffs& u, const Nonlinearity& f, double beta, Annulus annulus = Annulus::Inner,
                                        int samples = 200) {
  Step2Check out;
  const WeightedIntegral I = weighted_f_integral(u, f, beta);
  if (I.diverged) throw ConvergenceError("step2_pointwise_bound: weighted integral did not converge");
  out.integral = I.value;
  const int n = u.basis->dim();
  const bool inner = annulus == Annulus::Inner;
  for (double r : log_grid(1e-4, inner ? 1.0 : 0.5, samples)) {
    const double w = annulus_weight(n, beta, inner ? 0.5 * r : r);
    const double v = (w * f(eval(u, r)) - I.value) / I.value;
    if (v > out.max_violation) {
      out.max_violation = v;
      out.worst_rho = r;
    }
  }
  return out;
}

/// max over sample radii of |u(x)| / (c_{n,s} int_{B_1} |h(z)| |x - z|^{2s-n} dz)
/// with h = lambda f(u) and c_{n,s} the whole-space Riesz kernel constant.
/// h is tabulated on a uniform grid and interpolated by a cubic B-spline.
inline double riesz_bound_ratio(const RadialCoeffs& u, double lambda, const Nonlinearity& f, int radii = 20, double tol = 1e-8) {
  const BallBasis& b = *u.basis;
  if (lambda == 0.0) return 0.0;
  constexpr int cells = 4000;
  std::vector<double> h(cells + 1);
  for (int i = 0; i <= cells; ++i) h[static_cast<std::size_t>(i)] = std::abs(lambda * f(eval(u, static_cast<double>(i) / cells)));
  const boost::math::interpolators::cardinal_cubic_b_spline<double> spline(h.begin(), h.end(), 0.0, 1.0 / cells);
  const double c = riesz_kernel_constant(b.dim(), b.order());
  double worst = 0.0;
  for (int i = 0; i < radii; ++i) {
    const double x = (i + 0.5) / radii;
    const double bound = c * riesz_potential_radial([&](double r) { return spline(r); }, b.dim(), b.order(), x, tol);
    worst = std::max(worst, std::abs(eval(u, x)) / bound);
  }
  return worst;
}

struct RegularityReport {
  int n = 0;
  double s = 0.0;
  double critical_dim = 0.0;
  double decay_bound = 0.0;
  std::optional<double> fitted_interior_decay;
  double fitted_boundary_rate = 0.0;
  std::map<double, double> lemma_a_margins;
  std::map<double, double> weighted_f_values;
  bool riesz_pass = false;
  double riesz_max_ratio = 0.0;
};

}  // namespace fracgelfand
