#pragma once

// Test-only reference implementations, independent of the library code paths.

#include <cmath>
#include <functional>
#include <numbers>

namespace oracle {

/// J_0(x) from its power series (adequate for x < 10).
inline double j0_series(double x) {
  double term = 1.0, sum = 1.0;
  const double q = -0.25 * x * x;
  for (int m = 1; m < 60; ++m) {
    term *= q / (double(m) * m);
    sum += term;
  }
  return sum;
}

inline double bisect(const std::function<double(double)>& f, double a, double b) {
  double fa = f(a);
  for (int i = 0; i < 200; ++i) {
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    if ((fm > 0) == (fa > 0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

/// I_nu(x) from its power series.
inline double bessel_i_series(double nu, double x) {
  double term = std::pow(0.5 * x, nu) / std::tgamma(nu + 1.0);
  double sum = term;
  for (int m = 1; m < 80; ++m) {
    term *= 0.25 * x * x / (m * (m + nu));
    sum += term;
  }
  return sum;
}

/// K_s(x) = pi (I_{-s} - I_s) / (2 sin(pi s)), series route; fine for x <= 2.
inline double bessel_k_series(double s, double x) {
  return std::numbers::pi * (bessel_i_series(-s, x) - bessel_i_series(s, x)) / (2.0 * std::sin(std::numbers::pi * s));
}

/// Composite Simpson on [a,b].
inline double simpson(const std::function<double(double)>& f, double a, double b, int panels) {
  const double h = (b - a) / panels;
  double sum = f(a) + f(b);
  for (int i = 1; i < panels; ++i) sum += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

}  // namespace oracle
