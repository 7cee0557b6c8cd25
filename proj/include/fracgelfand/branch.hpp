#pragma once

// Minimal-solution branch of (-Delta)^s u = lambda f(u) on the unit ball in
// the radial eigen-coefficient space: monotone iteration, amplitude
// continuation by Newton's method, the linearized stability eigenvalue, and
// the extremal parameter lambda*.
//
// The discrete operator is diag(mu_k^s / sigma_k) with an exponential
// spectral filter sigma_k = exp(-strength (k/K)^order). Without it the
// truncated eigen-sums at the origin diverge with K for n >= 5 and small s;
// order = 0 switches it off.

#include "fracgelfand/nonlinearity.hpp"
#include "fracgelfand/spectral_ball.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace fracgelfand {

struct SpectralFilter {
  int order = 8;
  double strength = 36.0;
};

struct SolverOptions {
  double newton_tol = 1e-10;
  int max_newton = 50;
  double monotone_tol = 1e-9;
  long max_monotone = 100000;
  double blowup = 1e6;
  double eig_tol = 1e-8;
  double bracket_tol = 1e-3;  ///< relative width of the lambda* bracket
  SpectralFilter filter;
};

struct BranchPoint {
  double t = 0.0;
  double lambda = 0.0;
  RadialCoeffs u;
  double nu1 = 0.0;
  double residual = 0.0;
};

struct Branch {
  std::vector<BranchPoint> points;
  std::optional<std::size_t> fold_index;  ///< grid point of largest lambda, set once lambda decreases
  std::optional<BranchPoint> fold;        ///< root of nu1(t) between grid points
  std::optional<double> fold_lambda_quadratic;
  std::string failure;  ///< non-empty when continuation stopped early
};

struct MonotoneResult {
  enum class Status { Converged, BlowUp, NoConvergence };
  Status status = Status::NoConvergence;
  RadialCoeffs u;
  long iterations = 0;
  bool converged() const { return status == Status::Converged; }
};

struct LambdaStarEstimate {
  double lo = 0.0;
  double hi = 0.0;
  double fold_lambda = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> fold_lambda_quadratic;
  bool consistent = false;  ///< fold lambda lies in [lo, hi]
  int bisection_steps = 0;
};

class GelfandProblem {
 public:
  GelfandProblem(BasisPtr basis, Nonlinearity f, SolverOptions options = {})
      : basis_(std::move(basis)), f_(std::move(f)), opt_(options) {
    const int K = basis_->modes();
    sigma_.resize(K);
    mu_s_.resize(K);
    for (int k = 0; k < K; ++k) {
      sigma_(k) = opt_.filter.order > 0 ? std::exp(-opt_.filter.strength * std::pow((k + 1.0) / K, opt_.filter.order)) : 1.0;
      mu_s_(k) = basis_->symbol(k);
    }
    const auto w = basis_->quad_weights();
    const Eigen::Map<const Eigen::VectorXd> wv(w.data(), static_cast<Eigen::Index>(w.size()));
    project_ = basis_->node_values().transpose() * wv.asDiagonal();
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(w.size()));
    zeta0_ = sigma_.cwiseProduct(project_ * one).cwiseQuotient(mu_s_);
  }

  const BasisPtr& basis() const { return basis_; }
  const Nonlinearity& nonlinearity() const { return f_; }
  const SolverOptions& options() const { return opt_; }
  const Eigen::VectorXd& filter_weights() const { return sigma_; }

  /// Solution of the discrete problem with right-hand side 1.
  RadialCoeffs zeta0() const { return {basis_, zeta0_}; }

  /// Coefficients of f(u) projected on the basis.
  Eigen::VectorXd project_f(const Eigen::VectorXd& c) const {
    const Eigen::VectorXd un = basis_->node_values() * c;
    return project_ * un.unaryExpr([this](double x) { return f_(x); });
  }

  /// (mu_k^s / sigma_k) c_k - lambda [f(u)]_k.
  RadialCoeffs residual(const RadialCoeffs& u, double lambda) const {
    return {basis_, mu_s_.cwiseQuotient(sigma_).cwiseProduct(u.c) - lambda * project_f(u.c)};
  }

  /// u^{m+1} = lambda (-Delta)^{-s} f(u^m) from u^0 = 0 (or `start`).
  MonotoneResult monotone_iterate(double lambda, const RadialCoeffs* start = nullptr) const {
    if (!(lambda >= 0.0)) throw DomainError("monotone_iterate: lambda must be nonnegative");
    MonotoneResult out;
    Eigen::VectorXd c = start ? start->c : Eigen::VectorXd::Zero(basis_->modes());
    const Eigen::VectorXd gain = lambda * sigma_.cwiseQuotient(mu_s_);
    const Eigen::VectorXd& origin = basis_->origin_values();
    for (long m = 1; m <= opt_.max_monotone; ++m) {
      const Eigen::VectorXd next = gain.cwiseProduct(project_f(c));
      const Eigen::VectorXd step = next - c;
      c = next;
      out.iterations = m;
      const double u0 = origin.dot(c);
      if (!std::isfinite(u0) || u0 > opt_.blowup || !c.allFinite()) {
        out.status = MonotoneResult::Status::BlowUp;
        out.u = RadialCoeffs(basis_, c);
        return out;
      }
      const double sup = std::max((basis_->node_values() * step).cwiseAbs().maxCoeff(), std::abs(origin.dot(step)));
      if (sup < opt_.monotone_tol) {
        out.status = MonotoneResult::Status::Converged;
        out.u = RadialCoeffs(basis_, c);
        return out;
      }
    }
    out.status = MonotoneResult::Status::NoConvergence;
    out.u = RadialCoeffs(basis_, c);
    return out;
  }

  /// Smallest eigenvalue of diag(mu^s) - lambda S^{1/2} F S^{1/2}, with
  /// F_jk = int f'(u) phi_j phi_k and S = diag(sigma). This matrix is
  /// congruent to the Jacobian of the filtered system.
  double stability_eigenvalue(const RadialCoeffs& u, double lambda) const {
    const Eigen::VectorXd un = basis_->node_values() * u.c;
    const Eigen::VectorXd fp = un.unaryExpr([this](double x) { return f_.deriv(x); });
    const Eigen::VectorXd root = sigma_.cwiseSqrt();
    const Eigen::MatrixXd F = project_ * fp.asDiagonal() * basis_->node_values();
    Eigen::MatrixXd M = -lambda * root.asDiagonal() * F * root.asDiagonal();
    M.diagonal() += mu_s_;
    M = 0.5 * (M + M.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw ConvergenceError("stability_eigenvalue: eigensolver failed");
    return es.eigenvalues()(0);
  }

  /// Newton's method for {residual(u, lambda) = 0, u(0) = t}.
  BranchPoint newton_solve(double t, const RadialCoeffs& guess, double lambda_guess) const {
    if (!(t >= 0.0)) throw DomainError("newton_solve: amplitude t must be nonnegative");
    const int K = basis_->modes();
    BranchPoint p;
    p.t = t;
    if (t == 0.0) {
      p.u = RadialCoeffs::zero(basis_);
      p.nu1 = stability_eigenvalue(p.u, 0.0);
      return p;
    }
    Eigen::VectorXd c = guess.c;
    double lambda = lambda_guess;
    const Eigen::VectorXd& origin = basis_->origin_values();
    const Eigen::VectorXd A = mu_s_.cwiseQuotient(sigma_);
    for (int it = 0; it <= opt_.max_newton; ++it) {
      const Eigen::VectorXd un = basis_->node_values() * c;
      const Eigen::VectorXd fu = un.unaryExpr([this](double x) { return f_(x); });
      const Eigen::VectorXd Pf = project_ * fu;
      const Eigen::VectorXd R = A.cwiseProduct(c) - lambda * Pf;
      const double g = origin.dot(c) - t;
      const double floor = 16.0 * std::numeric_limits<double>::epsilon() * origin.cwiseProduct(c).cwiseAbs().sum();
      if (!R.allFinite() || !std::isfinite(g)) break;
      if (R.norm() <= opt_.newton_tol && std::abs(g) <= opt_.newton_tol + floor) {
        p.lambda = lambda;
        p.u = RadialCoeffs(basis_, c);
        p.residual = R.norm();
        p.nu1 = stability_eigenvalue(p.u, lambda);
        return p;
      }
      if (it == opt_.max_newton) break;
      // Rows scaled by sigma keep the system well conditioned.
      const Eigen::VectorXd fp = un.unaryExpr([this](double x) { return f_.deriv(x); });
      Eigen::MatrixXd J(K + 1, K + 1);
      J.topLeftCorner(K, K) = -lambda * sigma_.asDiagonal() * (project_ * fp.asDiagonal() * basis_->node_values());
      J.topLeftCorner(K, K).diagonal() += mu_s_;
      J.topRightCorner(K, 1) = -sigma_.cwiseProduct(Pf);
      J.bottomLeftCorner(1, K) = origin.transpose();
      J(K, K) = 0.0;
      Eigen::VectorXd rhs(K + 1);
      rhs.head(K) = -sigma_.cwiseProduct(R);
      rhs(K) = -g;
      const Eigen::VectorXd d = J.partialPivLu().solve(rhs);
      c += d.head(K);
      lambda += d(K);
    }
    throw ConvergenceError("newton_solve: no convergence at t = " + std::to_string(t));
  }

  /// Amplitude continuation over `t_grid` with a secant predictor; stops at
  /// the first failed solve. Marks the fold and refines it as the root of nu1.
  Branch continue_branch(const std::vector<double>& t_grid) const {
    for (std::size_t i = 0; i < t_grid.size(); ++i)
      if (!(t_grid[i] >= 0.0) || (i > 0 && !(t_grid[i] > t_grid[i - 1])))
        throw DomainError("continue_branch: t grid must be nonnegative and strictly increasing");
    Branch br;
    for (const double t : t_grid) {
      try {
        br.points.push_back(solve_near(br.points, t));
      } catch (const ConvergenceError& e) {
        br.failure = e.what();
        break;
      }
    }
    finish_branch(br);
    return br;
  }

  /// Continues from t = 0 in steps of `dt` until nu1 turns negative (then
  /// one more point is added) or t exceeds `t_cap`.
  Branch march_to_fold(double dt, double t_cap) const {
    Branch br;
    for (int i = 0; i * dt <= t_cap + 1e-12; ++i) {
      try {
        br.points.push_back(solve_near(br.points, i * dt));
      } catch (const ConvergenceError& e) {
        br.failure = e.what();
        break;
      }
      if (br.points.size() >= 2 && br.points.back().lambda < br.points[br.points.size() - 2].lambda &&
          br.points.back().nu1 < 0.0)
        break;
    }
    finish_branch(br);
    return br;
  }

  /// Bisection on lambda between monotone-iteration convergence and
  /// divergence, seeded from the branch; compared with the fold value.
  LambdaStarEstimate estimate_lambda_star(const Branch& br) const {
    LambdaStarEstimate est;
    double ref = 0.0;
    for (const auto& p : br.points) ref = std::max(ref, p.lambda);
    if (br.fold) {
      est.fold_lambda = br.fold->lambda;
      ref = std::max(ref, br.fold->lambda);
    }
    est.fold_lambda_quadratic = br.fold_lambda_quadratic;
    // A branch that barely leaves u = 0 says nothing about the scale of lambda*.
    if (!(ref > 1e-6 * mu_s_(0))) ref = mu_s_(0);
    double lo = 0.9 * ref, hi = 1.1 * ref;
    while (!monotone_iterate(lo).converged()) {
      hi = lo;
      lo *= 0.5;
      if (lo < 1e-12 * ref) throw ConvergenceError("estimate_lambda_star: no convergent lambda found");
    }
    while (monotone_iterate(hi).converged()) {
      lo = hi;
      hi *= 1.5;
      if (hi > 1e6 * ref) throw ConvergenceError("estimate_lambda_star: no divergent lambda found");
    }
    while (hi - lo > opt_.bracket_tol * lo) {
      const double mid = 0.5 * (lo + hi);
      (monotone_iterate(mid).converged() ? lo : hi) = mid;
      ++est.bisection_steps;
    }
    est.lo = lo;
    est.hi = hi;
    // The fold itself admits a solution, so a midpoint may round onto it.
    const double slack = 1e-12 * hi;
    est.consistent = std::isfinite(est.fold_lambda) && est.fold_lambda >= lo - slack && est.fold_lambda <= hi + slack;
    return est;
  }

  /// Branch point carrying a given solution (e.g. a monotone-iteration limit).
  BranchPoint point_from(const RadialCoeffs& u, double lambda) const {
    BranchPoint p;
    p.t = eval(u, 0.0);
    p.lambda = lambda;
    p.u = u;
    p.residual = residual(u, lambda).c.norm();
    p.nu1 = stability_eigenvalue(u, lambda);
    return p;
  }

 private:
  BranchPoint solve_near(const std::vector<BranchPoint>& pts, double t) const {
    if (t == 0.0) return newton_solve(0.0, RadialCoeffs::zero(basis_), 0.0);
    const std::size_t m = pts.size();
    if (m >= 2 && pts[m - 1].t > 0.0) {
      const BranchPoint& a = pts[m - 2];
      const BranchPoint& b = pts[m - 1];
      const double r = (t - b.t) / (b.t - a.t);
      return newton_solve(t, RadialCoeffs(basis_, b.u.c + r * (b.u.c - a.u.c)), b.lambda + r * (b.lambda - a.lambda));
    }
    if (m >= 1 && pts[m - 1].t > 0.0) {
      const BranchPoint& b = pts[m - 1];
      return newton_solve(t, (t / b.t) * b.u, b.lambda * t / b.t);
    }
    // Linearization at u = 0: u = lambda f(0) zeta0.
    const double lam = t / (f_(0.0) * basis_->origin_values().dot(zeta0_));
    return newton_solve(t, RadialCoeffs(basis_, lam * f_(0.0) * zeta0_), lam);
  }

  BranchPoint solve_nearest(const Branch& br, double t) const {
    const auto it = std::min_element(br.points.begin(), br.points.end(),
                                     [t](const BranchPoint& a, const BranchPoint& b) { return std::abs(a.t - t) < std::abs(b.t - t); });
    return newton_solve(t, it->u, it->lambda);
  }

  void finish_branch(Branch& br) const {
    const auto& pts = br.points;
    for (std::size_t i = 1; i < pts.size(); ++i)
      if (pts[i].lambda < pts[i - 1].lambda) {
        br.fold_index = i - 1;
        break;
      }
    if (br.fold_index && *br.fold_index >= 1 && *br.fold_index + 1 < pts.size()) {
      // Vertex of the parabola through the three points around the maximum.
      const std::size_t i = *br.fold_index;
      const double x0 = pts[i - 1].t, x1 = pts[i].t, x2 = pts[i + 1].t;
      const double y0 = pts[i - 1].lambda, y1 = pts[i].lambda, y2 = pts[i + 1].lambda;
      const double d01 = (y1 - y0) / (x1 - x0), d12 = (y2 - y1) / (x2 - x1);
      const double a = (d12 - d01) / (x2 - x0);
      const double b = d01 - a * (x0 + x1);
      if (a < 0.0) br.fold_lambda_quadratic = y1 - a * std::pow(x1 + b / (2 * a), 2);
    }
    for (std::size_t j = 1; j < pts.size(); ++j) {
      if (!(pts[j].nu1 < 0.0 && pts[j - 1].nu1 >= 0.0)) continue;
      std::optional<BranchPoint> best;
      const auto nu = [&](double t) {
        BranchPoint p = solve_nearest(br, t);
        if (!best || std::abs(p.nu1) < std::abs(best->nu1)) best = p;
        return p.nu1;
      };
      try {
        std::uintmax_t iters = 60;
        boost::math::tools::toms748_solve(nu, pts[j - 1].t, pts[j].t, pts[j - 1].nu1, pts[j].nu1,
                                          boost::math::tools::eps_tolerance<double>(44), iters);
      } catch (const ConvergenceError&) {
      }
      br.fold = best;
      break;
    }
  }

  BasisPtr basis_;
  Nonlinearity f_;
  SolverOptions opt_;
  Eigen::VectorXd sigma_, mu_s_, zeta0_;
  Eigen::MatrixXd project_;  ///< K x Q: phi_k(node) * weight
};

/// Fold point of a branch: the solution at the largest lambda.
inline const BranchPoint& extremal_solution(const Branch& br) {
  if (!br.fold) throw DomainError("extremal_solution: the branch has no fold");
  return *br.fold;
}

/// Violations of the branch invariants (monotone lambda on both sides of the
/// fold, nu1 >= -eig_tol before it, u(0) = t, residual bound).
inline std::vector<std::string> branch_violations(const Branch& br, const SolverOptions& opt) {
  std::vector<std::string> out;
  const auto& pts = br.points;
  const std::size_t fold = br.fold_index.value_or(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& p = pts[i];
    const std::string at = " at t=" + std::to_string(p.t);
    if (p.residual > opt.newton_tol) out.push_back("residual above tolerance" + at);
    if (std::abs(eval(p.u, 0.0) - p.t) > 1e-9 * std::max(1.0, p.t)) out.push_back("u(0) differs from t" + at);
    if (i > 0 && i <= fold && !(p.lambda > pts[i - 1].lambda)) out.push_back("lambda not increasing before fold" + at);
    if (i > fold + 1 && !(p.lambda < pts[i - 1].lambda)) out.push_back("lambda not decreasing after fold" + at);
    if (i < fold && p.nu1 < -opt.eig_tol) out.push_back("negative nu1 before fold" + at);
  }
  return out;
}

}  // namespace fracgelfand
