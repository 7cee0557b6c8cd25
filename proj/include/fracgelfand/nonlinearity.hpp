#pragma once

// Reaction terms f with f(0) > 0, f nondecreasing and superlinear:
// exponential, shifted powers (1+u)^p, and tabulated data through a
// monotone piecewise cubic (Fritsch-Butland slopes).

#include "fracgelfand/specfun.hpp"

#include <boost/math/interpolators/pchip.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace fracgelfand {

class Nonlinearity {
 public:
  enum class Kind { Exponential, Power, Table };

  static Nonlinearity exponential() {
    Nonlinearity f;
    f.kind_ = Kind::Exponential;
    f.spec_ = "exp";
    f.validate();
    return f;
  }

  /// f(u) = (1 + u)^p for u > -1, and 0 below.
  static Nonlinearity power(double p) {
    if (!(p > 1.0) || !std::isfinite(p)) throw DomainError("power nonlinearity needs a finite exponent p > 1, got " + std::to_string(p));
    Nonlinearity f;
    f.kind_ = Kind::Power;
    f.p_ = p;
    std::ostringstream os;
    os.precision(17);
    os << "power:" << p;
    f.spec_ = os.str();
    f.validate();
    return f;
  }

  /// Monotone cubic through (u_i, f_i); linear continuation outside the table.
  static Nonlinearity table(std::vector<double> u, std::vector<double> values, std::string label = "table") {
    if (u.size() != values.size() || u.size() < 3) throw DomainError("table nonlinearity needs at least 3 (u, f) pairs of equal length");
    for (std::size_t i = 1; i < u.size(); ++i)
      if (!(u[i] > u[i - 1])) throw DomainError("table nonlinearity: u values must be strictly increasing");
    if (!(u.front() <= 0.0 && u.back() >= 0.0)) throw DomainError("table nonlinearity: the table must contain u = 0");
    Nonlinearity f;
    f.kind_ = Kind::Table;
    f.spec_ = std::move(label);
    f.lo_ = u.front();
    f.hi_ = u.back();
    f.table_ = std::make_shared<const Pchip>(std::move(u), std::move(values));
    f.validate();
    return f;
  }

  /// Reads "u,f" rows; blank lines and lines starting with '#' are skipped,
  /// as is a first row that does not parse as numbers.
  static Nonlinearity table_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open nonlinearity table '" + path + "'");
    std::vector<double> u, f;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#') continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream row(line);
      double a = 0.0, b = 0.0;
      if (!(row >> a >> b)) {
        if (u.empty() && lineno == 1) continue;
        throw DomainError(path + ":" + std::to_string(lineno) + ": expected two numbers");
      }
      u.push_back(a);
      f.push_back(b);
    }
    return table(std::move(u), std::move(f), "table:" + path);
  }

  /// "exp", "power:p" or "table:path".
  static Nonlinearity parse(const std::string& spec) {
    if (spec == "exp") return exponential();
    if (spec.rfind("power:", 0) == 0) {
      const std::string rest = spec.substr(6);
      std::size_t used = 0;
      double p = 0.0;
      try {
        p = std::stod(rest, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != rest.size()) throw DomainError("bad power exponent in f spec '" + spec + "'");
      Nonlinearity f = power(p);
      f.spec_ = spec;
      return f;
    }
    if (spec.rfind("table:", 0) == 0) return table_file(spec.substr(6));
    throw DomainError("unknown nonlinearity '" + spec + "' (expected exp, power:p or table:path)");
  }

  Kind kind() const { return kind_; }
  const std::string& spec() const { return spec_; }

  double operator()(double u) const {
    switch (kind_) {
      case Kind::Exponential:
        return std::exp(u);
      case Kind::Power:
        return u > -1.0 ? std::pow(1.0 + u, p_) : 0.0;
      case Kind::Table:
        break;
    }
    if (u < lo_) return (*table_)(lo_) + (u - lo_) * table_->prime(lo_);
    if (u > hi_) return (*table_)(hi_) + (u - hi_) * table_->prime(hi_);
    return (*table_)(u);
  }

  double deriv(double u) const {
    switch (kind_) {
      case Kind::Exponential:
        return std::exp(u);
      case Kind::Power:
        return u > -1.0 ? p_ * std::pow(1.0 + u, p_ - 1.0) : 0.0;
      case Kind::Table:
        break;
    }
    return table_->prime(std::clamp(u, lo_, hi_));
  }

  /// Checks f(0) > 0, f' >= 0 on a grid of [0, 100], and f(100)/100 > f(1).
  void validate() const {
    const double f0 = (*this)(0.0);
    if (!(f0 > 0.0)) throw DomainError("nonlinearity '" + spec_ + "' violates f(0) > 0");
    for (int i = 0; i <= 1000; ++i) {
      const double u = 0.1 * i;
      const double d = deriv(u);
      if (std::isfinite(d) && d < 0.0) throw DomainError("nonlinearity '" + spec_ + "' decreases near u = " + std::to_string(u));
    }
    if (!((*this)(100.0) / 100.0 > (*this)(1.0))) throw DomainError("nonlinearity '" + spec_ + "' fails the superlinearity proxy f(100)/100 > f(1)");
  }

 private:
  using Pchip = boost::math::interpolators::pchip<std::vector<double>>;

  Nonlinearity() = default;

  Kind kind_ = Kind::Exponential;
  double p_ = 0.0;
  double lo_ = 0.0, hi_ = 0.0;
  std::shared_ptr<const Pchip> table_;
  std::string spec_;
};

}  // namespace fracgelfand
