#pragma once

// Quadrature rules: Gauss-Legendre nodes of arbitrary order, composite rules
// on geometrically graded panels, and thin wrappers around Boost's
// double-exponential integrators.

#include "fracgelfand/specfun.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <utility>
#include <vector>

namespace fracgelfand::quadrature {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }

  template <class F>
  double integrate(F&& f) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) sum += weights[i] * f(nodes[i]);
    return sum;
  }
};

/// Gauss-Legendre rule with `order` nodes on [a, b].
inline Rule gauss_legendre(int order, double a = -1.0, double b = 1.0) {
  if (order < 1) throw DomainError("gauss_legendre: order must be positive");
  Rule rule;
  rule.nodes.resize(static_cast<std::size_t>(order));
  rule.weights.resize(static_cast<std::size_t>(order));
  const int half = (order + 1) / 2;
  const double mid = 0.5 * (a + b), scale = 0.5 * (b - a);
  for (int i = 0; i < half; ++i) {
    // Tricomi's approximation of the i-th root, refined by Newton on P_n.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = order * (x * p1 - p0) / (x * x - 1.0);
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(order - 1 - i);
    rule.nodes[lo] = mid - scale * x;
    rule.nodes[hi] = mid + scale * x;
    rule.weights[lo] = rule.weights[hi] = scale * w;
  }
  return rule;
}

/// Composite Gauss-Legendre rule on panels [edges[i], edges[i+1]].
inline Rule composite(const std::vector<double>& edges, int per_panel) {
  const Rule ref = gauss_legendre(per_panel);
  Rule rule;
  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    const double mid = 0.5 * (edges[p] + edges[p + 1]);
    const double half = 0.5 * (edges[p + 1] - edges[p]);
    for (std::size_t i = 0; i < ref.size(); ++i) {
      rule.nodes.push_back(mid + half * ref.nodes[i]);
      rule.weights.push_back(half * ref.weights[i]);
    }
  }
  return rule;
}

/// Panel edges on [a, b] refined geometrically toward `a`: `levels` panels
/// [a + len*ratio^{l}, a + len*ratio^{l-1}] down to width len*ratio^levels,
/// preceded by [a, a + len*ratio^levels] and followed by `uniform` equal
/// panels covering [a + len*ratio, b].
inline std::vector<double> graded_edges(double a, double b, int levels, double ratio = 0.5, int uniform = 1) {
  const double len = b - a;
  std::vector<double> edges{a};
  for (int l = levels; l >= 1; --l) edges.push_back(a + len * std::pow(ratio, l));
  const double from = edges.back();
  for (int u = 1; u <= uniform; ++u) edges.push_back(from + (b - from) * u / uniform);
  return edges;
}

/// Result of an adaptive integration with its estimated error.
struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

namespace detail {

// Boost's integrators grow their node tables lazily, so a nested call must
// not reuse the object its caller is iterating over. Each nesting depth on a
// thread gets its own instance.
template <class Integrator>
class DepthPool {
 public:
  class Lease {
   public:
    explicit Lease(DepthPool& pool) : pool_(pool) {
      if (pool_.depth_ == pool_.items_.size()) pool_.items_.push_back(std::make_unique<Integrator>(12));
      item_ = pool_.items_[pool_.depth_++].get();
    }
    ~Lease() { --pool_.depth_; }
    Lease(const Lease&) = delete;
    Lease& operator=(const Lease&) = delete;
    Integrator& operator*() const { return *item_; }

   private:
    DepthPool& pool_;
    Integrator* item_ = nullptr;
  };

  static DepthPool& local() {
    thread_local DepthPool pool;
    return pool;
  }

 private:
  std::vector<std::unique_ptr<Integrator>> items_;
  std::size_t depth_ = 0;
};

}  // namespace detail

/// tanh-sinh on a finite interval; integrable endpoint singularities allowed.
template <class F>
Estimate tanh_sinh(F&& f, double a, double b, double tol = 1e-10) {
  using I = boost::math::quadrature::tanh_sinh<double>;
  typename detail::DepthPool<I>::Lease lease(detail::DepthPool<I>::local());
  Estimate e;
  e.value = (*lease).integrate(f, a, b, tol, &e.error);
  return e;
}

/// exp-sinh on [a, infinity).
template <class F>
Estimate exp_sinh(F&& f, double a, double tol = 1e-10) {
  using I = boost::math::quadrature::exp_sinh<double>;
  typename detail::DepthPool<I>::Lease lease(detail::DepthPool<I>::local());
  Estimate e;
  e.value = (*lease).integrate(f, a, std::numeric_limits<double>::infinity(), tol, &e.error);
  return e;
}

}  // namespace fracgelfand::quadrature
