#pragma once

// Special functions used by the radial basis and the cylinder extension:
// gamma, Bessel J of real order with its positive zeros, and the modified
// Bessel function K of fractional order.

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracgelfand {

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace specfun {

/// Root finding failed for the zero with 1-based index `index`.
class ZeroFindingError : public ConvergenceError {
 public:
  ZeroFindingError(double nu, int index)
      : ConvergenceError("Bessel zero search failed for nu=" + std::to_string(nu) +
                         " at zero index " + std::to_string(index)),
        nu_(nu),
        index_(index) {}
  double nu() const { return nu_; }
  int index() const { return index_; }

 private:
  double nu_;
  int index_;
};

/// Order of a Bessel function. Orders outside [0, 60] are rejected.
class BesselOrder {
 public:
  explicit BesselOrder(double nu) : nu_(nu) {
    if (!std::isfinite(nu) || nu < 0.0 || nu > 60.0)
      throw DomainError("Bessel order must lie in [0, 60], got " + std::to_string(nu));
  }
  double value() const { return nu_; }

 private:
  double nu_;
};

inline double gamma(double x) {
  if (!(x > 0.0)) throw DomainError("gamma: argument must be positive, got " + std::to_string(x));
  return boost::math::tgamma(x);
}

inline double bessel_j(BesselOrder order, double x) {
  if (!(x >= 0.0)) throw DomainError("bessel_j: argument must be nonnegative");
  return boost::math::cyl_bessel_j(order.value(), x);
}

/// x^{-nu} J_nu(x), continuous at x = 0 where it equals 2^{-nu}/Gamma(nu+1).
inline double scaled_bessel_j(BesselOrder order, double x) {
  const double nu = order.value();
  if (x < 1.0) {
    // Power series; for x < 1 the 14th term is below 1e-24 of the first.
    const double q = -0.25 * x * x;
    double term = 1.0 / boost::math::tgamma(nu + 1.0);
    double sum = term;
    for (int m = 1; m < 14; ++m) {
      term *= q / (m * (nu + m));
      sum += term;
    }
    return sum * std::pow(2.0, -nu);
  }
  return boost::math::cyl_bessel_j(nu, x) / std::pow(x, nu);
}

/// Modified Bessel function of the second kind K_s(x) for 0 < s < 1.
inline double bessel_k(double s, double x) {
  if (!(s > 0.0 && s < 1.0)) throw DomainError("bessel_k: order must lie in (0,1)");
  if (!(x > 0.0)) throw DomainError("bessel_k: argument must be positive");
  return boost::math::cyl_bessel_k(s, x);
}

namespace detail {

inline double mcmahon_guess(double nu, int k) {
  const double beta = (k + 0.5 * nu - 0.25) * std::numbers::pi;
  const double m = 4.0 * nu * nu;
  const double b8 = 8.0 * beta;
  return beta - (m - 1.0) / b8 - 4.0 * (m - 1.0) * (7.0 * m - 31.0) / (3.0 * b8 * b8 * b8);
}

inline double j_derivative(double nu, double x) {
  return (nu / x) * boost::math::cyl_bessel_j(nu, x) - boost::math::cyl_bessel_j(nu + 1.0, x);
}

// Newton iteration kept inside the sign-bracketing interval [a, b];
// falls back to bisection whenever a Newton step leaves it.
inline double safeguarded_newton(double nu, double a, double b, int index) {
  double fa = boost::math::cyl_bessel_j(nu, a);
  double x = 0.5 * (a + b);
  for (int it = 0; it < 200; ++it) {
    const double fx = boost::math::cyl_bessel_j(nu, x);
    if (fx == 0.0) return x;
    if ((fx > 0.0) == (fa > 0.0)) {
      a = x;
      fa = fx;
    } else {
      b = x;
    }
    const double d = j_derivative(nu, x);
    double next = x - fx / d;
    if (!(next > a && next < b) || d == 0.0) next = 0.5 * (a + b);
    if (std::abs(next - x) <= 4.0 * std::numeric_limits<double>::epsilon() * x) return next;
    x = next;
  }
  throw ZeroFindingError(nu, index);
}

}  // namespace detail

/// One Newton step toward the nearest zero of J_nu; used to revalidate cached zeros.
inline double bessel_j_zero_newton_step(BesselOrder order, double x) {
  const double nu = order.value();
  return x - boost::math::cyl_bessel_j(nu, x) / detail::j_derivative(nu, x);
}

/// The first `count` positive zeros of J_nu, strictly increasing.
///
/// Each zero starts from McMahon's asymptotic guess; if the guess does not
/// sit inside a sign change beyond the previous zero (small k, large nu),
/// the interval is found by scanning forward in steps shorter than the zero
/// spacing. The bracket is then tightened by safeguarded Newton.
inline std::vector<double> bessel_j_zeros(BesselOrder order, int count) {
  if (count < 1) throw DomainError("bessel_j_zeros: count must be positive");
  const double nu = order.value();
  const auto J = [nu](double x) { return boost::math::cyl_bessel_j(nu, x); };
  std::vector<double> zeros;
  zeros.reserve(static_cast<std::size_t>(count));
  // J_nu has no zeros in (0, nu]; consecutive zeros are more than 3 apart.
  double floor = std::max(nu, 1e-2);
  for (int k = 1; k <= count; ++k) {
    double a = 0.0, b = 0.0;
    bool bracketed = false;
    const double g = detail::mcmahon_guess(nu, k);
    if (g - 0.4 > floor) {
      a = g - 0.4;
      b = g + 0.4;
      // The guess must not have jumped past the k-th zero.
      bracketed = (J(a) > 0.0) != (J(b) > 0.0) && (J(a) > 0.0) == (J(floor) > 0.0);
    }
    if (!bracketed) {
      a = floor;
      const double fa = J(a);
      for (int step = 0; step < 4000 && !bracketed; ++step) {
        b = a + 0.25;
        if ((J(b) > 0.0) != (fa > 0.0)) {
          bracketed = true;
        } else {
          a = b;
        }
      }
      if (!bracketed) throw ZeroFindingError(nu, k);
    }
    const double z = detail::safeguarded_newton(nu, a, b, k);
    if (!zeros.empty() && !(z > zeros.back() + 1.0)) throw ZeroFindingError(nu, k);
    if (std::abs(J(z)) > 1e-12) throw ZeroFindingError(nu, k);
    zeros.push_back(z);
    floor = z + 1.0;
  }
  return zeros;
}

}  // namespace specfun
}  // namespace fracgelfand
