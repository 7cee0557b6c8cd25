#pragma once

// Experiment drivers behind the command-line tool: each one takes a
// validated configuration, runs the library, and writes its result files
// atomically into out_dir.

#include "fracgelfand/branch.hpp"
#include "fracgelfand/config.hpp"
#include "fracgelfand/extension.hpp"
#include "fracgelfand/persist.hpp"
#include "fracgelfand/regularity.hpp"
#include "fracgelfand/spectral_ball.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace fracgelfand {

using Json = nlohmann::ordered_json;

/// Basis for the configuration; `modes` overrides cfg.modes when positive.
inline BasisPtr make_basis(const ExperimentConfig& cfg, ZeroCache* cache, int modes = 0) {
  const int K = modes > 0 ? modes : cfg.modes;
  const int quad = modes > 0 ? 0 : cfg.effective_quad_order();
  BasisPtr b = BallBasis::build(cfg.n, cfg.s, K, quad, cache ? cache->source() : ZeroSource{});
  if (cfg.perturb_mu2) b = b->with_perturbed_eigenvalue(1, *cfg.perturb_mu2);
  return b;
}

inline GelfandProblem make_problem(const ExperimentConfig& cfg, ZeroCache* cache) {
  return GelfandProblem(make_basis(cfg, cache), Nonlinearity::parse(cfg.f_spec), cfg.tolerances);
}

inline Json json_number(double x) {
  if (!std::isfinite(x)) return nullptr;
  return x;
}

// ---------------------------------------------------------------- branch

struct BranchRun {
  Branch branch;
  std::optional<LambdaStarEstimate> lambda_star;
  std::optional<double> extremal_u0;
  std::string failure;  ///< continuation or lambda* failure, empty on success
  Json summary;
};

inline std::string branch_csv(const Branch& br) {
  std::string out = "t,lambda,u0,nu1,h_norm,residual\n";
  for (const auto& p : br.points) {
    out += format_double(p.t) + ',' + format_double(p.lambda) + ',' + format_double(eval(p.u, 0.0)) + ',' + format_double(p.nu1) + ',' +
           format_double(h_norm(p.u)) + ',' + format_double(p.residual) + '\n';
  }
  return out;
}

/// Continuation over cfg.t_grid(), then the lambda* bracket.
inline BranchRun compute_branch(const ExperimentConfig& cfg, ZeroCache* cache) {
  const GelfandProblem P = make_problem(cfg, cache);
  BranchRun run;
  run.branch = P.continue_branch(cfg.t_grid());
  run.failure = run.branch.failure;
  if (run.branch.points.size() >= 2) {
    try {
      run.lambda_star = P.estimate_lambda_star(run.branch);
      if (run.branch.fold) {
        run.extremal_u0 = run.branch.fold->t;
      } else {
        const auto m = P.monotone_iterate(run.lambda_star->lo);
        if (m.converged()) run.extremal_u0 = eval(m.u, 0.0);
      }
    } catch (const ConvergenceError& e) {
      if (!run.failure.empty()) run.failure += "; ";
      run.failure += e.what();
    }
  }

  const auto& ls = run.lambda_star;
  Json& j = run.summary;
  j["lambda_star_lo"] = ls ? json_number(ls->lo) : Json(nullptr);
  j["lambda_star_hi"] = ls ? json_number(ls->hi) : Json(nullptr);
  j["fold_t"] = run.branch.fold ? json_number(run.branch.fold->t) : Json(nullptr);
  j["extremal_u0"] = run.extremal_u0 ? json_number(*run.extremal_u0) : Json(nullptr);
  j["critical_dim"] = critical_dimension(cfg.s);
  j["decay_bound"] = decay_exponent_bound(cfg.n, cfg.s);
  j["n"] = cfg.n;
  j["s"] = cfg.s;
  j["f_spec"] = cfg.f_spec;
  j["modes"] = cfg.modes;
  j["fold_lambda"] = run.branch.fold ? json_number(run.branch.fold->lambda) : Json(nullptr);
  j["fold_nu1"] = run.branch.fold ? json_number(run.branch.fold->nu1) : Json(nullptr);
  j["lambda_star_consistent"] = ls ? Json(ls->consistent) : Json(nullptr);
  j["points"] = run.branch.points.size();
  j["failure"] = run.failure.empty() ? Json(nullptr) : Json(run.failure);
  return run;
}

/// Writes branch.csv and summary.json. A truncated branch is still written.
inline BranchRun run_branch(const ExperimentConfig& cfg, ZeroCache* cache) {
  BranchRun run = compute_branch(cfg, cache);
  const std::filesystem::path dir(cfg.out_dir);
  atomic_write(dir / "branch.csv", branch_csv(run.branch));
  atomic_write(dir / "summary.json", run.summary.dump(2) + "\n");
  return run;
}

// ---------------------------------------------------------------- verify

struct CheckResult {
  enum class Status { Pass, Fail, Skipped, Error };
  std::string name;
  Status status = Status::Skipped;
  double value = std::numeric_limits<double>::quiet_NaN();
  double threshold = std::numeric_limits<double>::quiet_NaN();
  double margin = std::numeric_limits<double>::quiet_NaN();  ///< >= 0 means the check holds
  std::string detail;

  bool ok() const { return status == Status::Pass || status == Status::Skipped; }
};

inline const char* to_string(CheckResult::Status s) {
  switch (s) {
    case CheckResult::Status::Pass: return "pass";
    case CheckResult::Status::Fail: return "fail";
    case CheckResult::Status::Skipped: return "skipped";
    case CheckResult::Status::Error: return "error";
  }
  return "error";
}

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.ok(); });
  }
  Json to_json() const {
    Json j = Json::object();
    for (const auto& c : checks) {
      j[c.name] = {{"status", to_string(c.status)},
                   {"value", json_number(c.value)},
                   {"threshold", json_number(c.threshold)},
                   {"margin", json_number(c.margin)},
                   {"detail", c.detail}};
    }
    return j;
  }
};

namespace detail {

/// Deterministic uniform doubles in [0, 1) that do not depend on the
/// standard library's distribution implementation.
class UnitStream {
 public:
  explicit UnitStream(std::uint64_t seed) : rng_(seed) {}
  double operator()() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 rng_;
};

/// Value must stay at or below the threshold.
inline CheckResult upper(std::string name, double value, double threshold, std::string detail = {}) {
  CheckResult c{std::move(name), CheckResult::Status::Pass, value, threshold, threshold - value, std::move(detail)};
  if (!(c.margin >= 0.0)) c.status = CheckResult::Status::Fail;
  return c;
}

/// Value must stay at or above the threshold.
inline CheckResult lower(std::string name, double value, double threshold, std::string detail = {}) {
  CheckResult c{std::move(name), CheckResult::Status::Pass, value, threshold, value - threshold, std::move(detail)};
  if (!(c.margin >= 0.0)) c.status = CheckResult::Status::Fail;
  return c;
}

inline CheckResult skipped(std::string name, std::string why) {
  CheckResult c;
  c.name = std::move(name);
  c.detail = std::move(why);
  return c;
}

inline std::string fmt(double x) { return format_double(x); }

}  // namespace detail

/// Shared inputs of the verification checks; the branch is computed on first use.
class VerifyContext {
 public:
  VerifyContext(const ExperimentConfig& cfg, ZeroCache* cache) : cfg_(cfg), cache_(cache) {}

  const ExperimentConfig& config() const { return cfg_; }
  ZeroCache* cache() const { return cache_; }
  bool fractional() const { return cfg_.s < 1.0; }

  const BasisPtr& basis() {
    if (!basis_) basis_ = make_basis(cfg_, cache_);
    return basis_;
  }
  const GelfandProblem& problem() {
    if (!problem_) problem_.emplace(basis(), Nonlinearity::parse(cfg_.f_spec), cfg_.tolerances);
    return *problem_;
  }
  const Branch& branch() {
    if (!branch_) {
      branch_ = problem().continue_branch(cfg_.t_grid());
      if (branch_->points.size() < 2) throw ConvergenceError("branch has fewer than two points: " + branch_->failure);
    }
    return *branch_;
  }
  /// Points before the fold (all points when there is none).
  std::vector<const BranchPoint*> stable_points() {
    const Branch& br = branch();
    const std::size_t end = br.fold_index ? *br.fold_index + 1 : br.points.size();
    std::vector<const BranchPoint*> out;
    for (std::size_t i = 0; i < end; ++i) out.push_back(&br.points[i]);
    return out;
  }

 private:
  ExperimentConfig cfg_;
  ZeroCache* cache_;
  BasisPtr basis_;
  std::optional<GelfandProblem> problem_;
  std::optional<Branch> branch_;
};

namespace checks {

using detail::fmt;

inline CheckResult flux_constant(VerifyContext& ctx) {
  if (!ctx.fractional()) return detail::skipped("flux_constant", "extension undefined for s = 1");
  const double exact = fracgelfand::flux_constant(ctx.config().s);
  double worst = 0.0;
  for (int k : {0, 1, 4}) {
    const double got = flux_constant_numeric(*ctx.basis(), k).value;
    worst = std::max(worst, std::abs(got / exact - 1.0));
  }
  return detail::upper("flux_constant", worst, 1e-5, "max relative deviation over modes 1, 2, 5; exact " + fmt(exact));
}

inline CheckResult energy_identity(VerifyContext& ctx) {
  if (!ctx.fractional()) return detail::skipped("energy_identity", "extension undefined for s = 1");
  const auto b = make_basis(ctx.config(), ctx.cache(), 8);
  detail::UnitStream rnd(ctx.config().seed);
  const double c = fracgelfand::flux_constant(ctx.config().s);
  double worst = 0.0;
  for (int trial = 0; trial < 3; ++trial) {
    Eigen::VectorXd v(8);
    for (int k = 0; k < 8; ++k) v(k) = 2.0 * rnd() - 1.0;
    const RadialCoeffs u(b, v);
    const double e = extension_energy(ExtensionField(u));
    worst = std::max(worst, std::abs(e / (c * std::pow(h_norm(u), 2)) - 1.0));
  }
  return detail::upper("energy_identity", worst, 1e-4, "max relative deviation over 3 random 8-mode vectors");
}

inline CheckResult max_principle(VerifyContext& ctx) {
  detail::UnitStream rnd(ctx.config().seed + 1);
  double lowest = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 20; ++trial) {
    double a[4];
    for (double& x : a) x = rnd();
    const auto h = [&](double r) {
      double sum = 0.0, p = 1.0;
      for (double ai : a) sum += ai * p, p *= r * r;
      return sum;
    };
    const auto u = inv_frac_laplacian(analyze(ctx.basis(), h));
    for (int i = 0; i < 200; ++i) lowest = std::min(lowest, eval(u, i / 199.0));
  }
  return detail::lower("max_principle", lowest, -1e-8, "minimum over 20 nonnegative right-hand sides on 200 radii");
}

inline CheckResult orthonormality(VerifyContext& ctx) {
  const BallBasis& b = *ctx.basis();
  const Eigen::MatrixXd G = gram_matrix(b);
  const double gram = (G - Eigen::MatrixXd::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff();
  double eig = 0.0;
  for (int k = 0; k < b.modes(); ++k) {
    const double j = b.bessel_zeros()[static_cast<std::size_t>(k)];
    eig = std::max(eig, std::abs(b.eigenvalues()[static_cast<std::size_t>(k)] / (j * j) - 1.0));
  }
  return detail::upper("orthonormality", std::max(gram, eig), 1e-10,
                       "gram deviation " + fmt(gram) + ", eigenvalue vs squared zero " + fmt(eig));
}

inline CheckResult riesz_bound(VerifyContext& ctx) {
  if (2.0 * ctx.config().s >= ctx.config().n) return detail::skipped("riesz_bound", "Riesz kernel needs 2s < n");
  double worst = 0.0;
  const auto& P = ctx.problem();
  for (const auto& p : ctx.branch().points) worst = std::max(worst, riesz_bound_ratio(p.u, p.lambda, P.nonlinearity()));
  return detail::upper("riesz_bound", worst, 1.0 + 1e-3, "max ratio u / Riesz bound over branch points and 20 radii");
}

inline CheckResult lemma_a_grid(VerifyContext& ctx) {
  if (!ctx.fractional()) return detail::skipped("lemma_a_grid", "defined for s < 1 only");
  const int n = ctx.config().n;
  const double s = ctx.config().s;
  double lowest = std::numeric_limits<double>::infinity();
  std::string detail;
  for (double beta : {0.5, 0.5 * n, 0.9 * n}) {
    const double m = lemma_a_margin(n, s, beta);
    lowest = std::min(lowest, m);
    detail += (detail.empty() ? "" : ", ") + std::string("beta=") + fmt(beta) + ": " + fmt(m);
  }
  return detail::lower("lemma_a_grid", lowest, 0.0, detail);
}

inline CheckResult boundary_rate(VerifyContext& ctx) {
  const double s = ctx.config().s;
  const TorsionSeries zeta(ctx.config().n, s, ctx.config().modes);
  const double rate = boundary_decay_rate([&](double r) { return zeta(r); });
  return detail::lower("boundary_rate", rate, std::min(2.0 * s, 1.0) - 0.05, "torsion function, fit over distances 1e-4..1e-2");
}

inline CheckResult radial_monotonicity(VerifyContext& ctx) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& p : ctx.branch().points)
    for (int k = 1; k <= 100; ++k) worst = std::max(worst, eval_derivative(p.u, k / 101.0));
  return detail::upper("radial_monotonicity", worst, 1e-8, "max du/drho over branch points and 100 radii");
}

/// The two branch points closest to lambda* in lambda, ordered by t.
inline std::pair<const BranchPoint*, const BranchPoint*> points_near_lambda_star(const Branch& br) {
  double ls = 0.0;
  for (const auto& p : br.points) ls = std::max(ls, p.lambda);
  if (br.fold) ls = std::max(ls, br.fold->lambda);
  std::vector<const BranchPoint*> pts;
  for (const auto& p : br.points) pts.push_back(&p);
  std::stable_sort(pts.begin(), pts.end(), [&](const BranchPoint* a, const BranchPoint* b) {
    return std::abs(a->lambda - ls) < std::abs(b->lambda - ls);
  });
  if (pts[0]->t > pts[1]->t) std::swap(pts[0], pts[1]);
  return {pts[0], pts[1]};
}

inline double key_alpha(int n) { return 1.0 + std::sqrt(n - 1.0) - 0.1; }

inline CheckResult weighted_key_estimate(VerifyContext& ctx) {
  if (!ctx.fractional()) return detail::skipped("weighted_key_estimate", "extension undefined for s = 1");
  const auto [a, b] = points_near_lambda_star(ctx.branch());
  const CutoffSpec spec{.alpha = key_alpha(ctx.config().n)};
  const auto ia = weighted_vrho_integral(ExtensionField(a->u), spec);
  const auto ib = weighted_vrho_integral(ExtensionField(b->u), spec);
  if (ia.diverged || ib.diverged) {
    CheckResult c = detail::upper("weighted_key_estimate", std::numeric_limits<double>::infinity(), 2.0, "weighted integral did not settle");
    c.status = CheckResult::Status::Fail;
    return c;
  }
  return detail::upper("weighted_key_estimate", ib.value / ia.value, 2.0,
                       "growth between t=" + fmt(a->t) + " and t=" + fmt(b->t) + ", alpha=" + fmt(spec.alpha));
}

inline CheckResult stability_weighted_inequality(VerifyContext& ctx) {
  if (!ctx.fractional()) return detail::skipped("stability_weighted_inequality", "extension undefined for s = 1");
  std::vector<const BranchPoint*> stable;
  for (const BranchPoint* p : ctx.stable_points())
    if (p->t > 0.0 && p->nu1 >= 0.0) stable.push_back(p);
  if (stable.empty()) {
    CheckResult c = detail::lower("stability_weighted_inequality", std::numeric_limits<double>::quiet_NaN(), -1e-6, "no stable branch points");
    c.status = CheckResult::Status::Fail;
    return c;
  }
  const CutoffSpec spec{.alpha = key_alpha(ctx.config().n)};
  const std::size_t count = std::min<std::size_t>(5, stable.size());
  double lowest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t idx = count == 1 ? stable.size() - 1 : (stable.size() - 1) * i / (count - 1);
    lowest = std::min(lowest, stability_weighted_inequality(ExtensionField(stable[idx]->u), spec).margin());
  }
  return detail::lower("stability_weighted_inequality", lowest, -1e-6,
                       "min lhs - rhs over " + std::to_string(count) + " stable points, alpha=" + fmt(spec.alpha));
}

inline CheckResult exp_decay_y(VerifyContext& ctx) {
  if (!ctx.fractional()) return detail::skipped("exp_decay_y", "extension undefined for s = 1");
  const double target = 0.9 * std::sqrt(ctx.basis()->eigenvalues()[0]);
  double slowest = std::numeric_limits<double>::infinity();
  for (const auto& p : ctx.branch().points)
    if (p.t > 0.0) slowest = std::min(slowest, axial_decay_rate(ExtensionField(p.u)));
  return detail::lower("exp_decay_y", slowest, target, "slowest fitted rate of v(0, y) on y in [2, 10]");
}

/// mu_1^s b_1 = lambda sigma_1 <f(u), phi_1> at every branch point.
inline CheckResult phi1_identity(VerifyContext& ctx) {
  const auto& P = ctx.problem();
  double worst = 0.0;
  for (const auto& p : ctx.branch().points) {
    if (p.t == 0.0) continue;
    const double lhs = ctx.basis()->symbol(0) * p.u.c(0);
    const double rhs = p.lambda * P.filter_weights()(0) * P.project_f(p.u.c)(0);
    worst = std::max(worst, std::abs(lhs / rhs - 1.0));
  }
  return detail::upper("phi1_identity", worst, 1e-8, "max relative mismatch of the first-mode identity");
}

}  // namespace checks

inline CheckResult run_check(const std::string& name, VerifyContext& ctx) {
  static const std::vector<std::pair<std::string, CheckResult (*)(VerifyContext&)>> table{
      {"flux_constant", checks::flux_constant},
      {"energy_identity", checks::energy_identity},
      {"max_principle", checks::max_principle},
      {"orthonormality", checks::orthonormality},
      {"riesz_bound", checks::riesz_bound},
      {"lemma_a_grid", checks::lemma_a_grid},
      {"boundary_rate", checks::boundary_rate},
      {"radial_monotonicity", checks::radial_monotonicity},
      {"weighted_key_estimate", checks::weighted_key_estimate},
      {"stability_weighted_inequality", checks::stability_weighted_inequality},
      {"exp_decay_y", checks::exp_decay_y},
      {"phi1_identity", checks::phi1_identity},
  };
  const auto it = std::find_if(table.begin(), table.end(), [&](const auto& e) { return e.first == name; });
  if (it == table.end()) throw ConfigError("unknown check '" + name + "'");
  try {
    return it->second(ctx);
  } catch (const std::exception& e) {
    CheckResult c;
    c.name = name;
    c.status = CheckResult::Status::Error;
    c.detail = e.what();
    return c;
  }
}

/// Runs cfg.checks in order and writes verify.json.
inline VerifyReport run_verify(const ExperimentConfig& cfg, ZeroCache* cache, const std::function<void(const CheckResult&)>& progress = {}) {
  VerifyContext ctx(cfg, cache);
  VerifyReport report;
  for (const auto& name : cfg.checks) {
    report.checks.push_back(run_check(name, ctx));
    if (progress) progress(report.checks.back());
  }
  atomic_write(std::filesystem::path(cfg.out_dir) / "verify.json", report.to_json().dump(2) + "\n");
  return report;
}

// ---------------------------------------------------------------- lambda-star

/// lambda* from the monotone iteration, cross-checked against the fold of a
/// continuation over the configured grid. Writes lambda_star.json.
inline Json run_lambda_star(const ExperimentConfig& cfg, ZeroCache* cache) {
  const GelfandProblem P = make_problem(cfg, cache);
  const Branch br = P.continue_branch(cfg.t_grid());
  const LambdaStarEstimate est = P.estimate_lambda_star(br);
  Json j;
  j["n"] = cfg.n;
  j["s"] = cfg.s;
  j["f_spec"] = cfg.f_spec;
  j["modes"] = cfg.modes;
  j["lambda_star_lo"] = est.lo;
  j["lambda_star_hi"] = est.hi;
  j["bisection_steps"] = est.bisection_steps;
  j["fold_lambda"] = json_number(est.fold_lambda);
  j["fold_lambda_quadratic"] = est.fold_lambda_quadratic ? json_number(*est.fold_lambda_quadratic) : Json(nullptr);
  j["fold_t"] = br.fold ? json_number(br.fold->t) : Json(nullptr);
  j["consistent"] = est.consistent;
  j["branch_failure"] = br.failure.empty() ? Json(nullptr) : Json(br.failure);
  atomic_write(std::filesystem::path(cfg.out_dir) / "lambda_star.json", j.dump(2) + "\n");
  return j;
}

// ---------------------------------------------------------------- table

/// critical_dimension and decay_exponent_bound over n in [n_lo, n_hi] and
/// s_count values spread evenly over (0, 1]. Returns CSV text.
inline std::string exponent_table(int n_lo, int n_hi, int s_count) {
  if (n_lo < 2 || n_hi < n_lo || s_count < 1) throw ConfigError("table needs 2 <= n_lo <= n_hi and at least one s value");
  std::string out = "n,s,critical_dim,decay_bound,bounded_regime\n";
  for (int n = n_lo; n <= n_hi; ++n)
    for (int i = 1; i <= s_count; ++i) {
      const double s = static_cast<double>(i) / s_count;
      const double cd = critical_dimension(s);
      out += std::to_string(n) + ',' + format_double(s) + ',' + format_double(cd) + ',' + format_double(decay_exponent_bound(n, s)) + ',' +
             (n < cd ? "1" : "0") + '\n';
    }
  return out;
}

// ---------------------------------------------------------------- extremal

struct ExtremalRun {
  RegularityReport report;
  bool from_fold = false;
  double lambda = 0.0;
  double u0 = 0.0;
  std::optional<double> envelope_C;  ///< supercritical regime only
  Json json;
};

/// Extremal (or near-extremal) solution with decay fits and the regularity
/// diagnostics. Writes extremal.json and extremal_profile.csv.
inline ExtremalRun run_extremal(const ExperimentConfig& cfg, ZeroCache* cache) {
  const GelfandProblem P = make_problem(cfg, cache);
  const Nonlinearity& f = P.nonlinearity();
  ExtremalRun run;
  RadialCoeffs u;
  const Branch br = P.continue_branch(cfg.t_grid());
  const LambdaStarEstimate est = P.estimate_lambda_star(br);
  if (br.fold) {
    run.from_fold = true;
    u = br.fold->u;
    run.lambda = br.fold->lambda;
  } else {
    const auto m = P.monotone_iterate(est.lo);
    if (!m.converged()) throw ConvergenceError("run_extremal: monotone iteration failed below lambda*");
    u = m.u;
    run.lambda = est.lo;
  }
  run.u0 = eval(u, 0.0);

  RegularityReport& r = run.report;
  r.n = cfg.n;
  r.s = cfg.s;
  r.critical_dim = critical_dimension(cfg.s);
  r.decay_bound = decay_exponent_bound(cfg.n, cfg.s);
  const DecayFit interior = fit_decay_exponent(u, {1e-3, 0.3});
  r.fitted_interior_decay = interior.mu;
  r.fitted_boundary_rate = boundary_decay_rate(u);
  if (cfg.s < 1.0)
    for (double beta : {0.5, 0.5 * cfg.n, 0.9 * cfg.n}) r.lemma_a_margins[beta] = lemma_a_margin(cfg.n, cfg.s, beta);
  for (double beta : {0.0, 0.5, 1.0, 0.5 * cfg.n}) {
    if (beta >= std::min<double>(cfg.n, weighted_beta_limit(cfg.n, cfg.s))) continue;
    const auto w = weighted_f_integral(u, f, beta);
    if (!w.diverged) r.weighted_f_values[beta] = w.value;
  }
  if (2.0 * cfg.s < cfg.n) {
    r.riesz_max_ratio = riesz_bound_ratio(u, run.lambda, f);
    r.riesz_pass = r.riesz_max_ratio <= 1.0 + 1e-3;
  }
  if (r.decay_bound > 0.1) run.envelope_C = envelope_constant([&](double x) { return eval(u, x); }, r.decay_bound - 0.1, {1e-3, 0.3});

  Json& j = run.json;
  j["n"] = cfg.n;
  j["s"] = cfg.s;
  j["f_spec"] = cfg.f_spec;
  j["modes"] = cfg.modes;
  j["source"] = run.from_fold ? "fold" : "monotone_iteration_below_lambda_star";
  j["lambda"] = run.lambda;
  j["lambda_star_lo"] = est.lo;
  j["lambda_star_hi"] = est.hi;
  j["extremal_u0"] = run.u0;
  j["critical_dim"] = r.critical_dim;
  j["decay_bound"] = r.decay_bound;
  j["bounded_regime"] = cfg.n < r.critical_dim;
  j["fitted_interior_decay"] = interior.mu;
  j["fitted_interior_r2"] = interior.r2;
  j["envelope_mu"] = run.envelope_C ? json_number(r.decay_bound - 0.1) : Json(nullptr);
  j["envelope_C"] = run.envelope_C ? json_number(*run.envelope_C) : Json(nullptr);
  j["fitted_boundary_rate"] = r.fitted_boundary_rate;
  Json margins = Json::array(), weighted = Json::array();
  for (const auto& [beta, m] : r.lemma_a_margins) margins.push_back({{"beta", beta}, {"margin", m}});
  for (const auto& [beta, v] : r.weighted_f_values) weighted.push_back({{"beta", beta}, {"value", v}});
  j["lemma_a_margins"] = margins;
  j["weighted_f_values"] = weighted;
  j["riesz_pass"] = r.riesz_pass;
  j["riesz_max_ratio"] = r.riesz_max_ratio;

  std::string profile = "rho,u,du_drho\n";
  for (int i = 0; i <= 200; ++i) {
    const double rho = i / 200.0;
    profile += format_double(rho) + ',' + format_double(eval(u, rho)) + ',' + format_double(eval_derivative(u, rho)) + '\n';
  }
  const std::filesystem::path dir(cfg.out_dir);
  atomic_write(dir / "extremal_profile.csv", profile);
  atomic_write(dir / "extremal.json", j.dump(2) + "\n");
  return run;
}

}  // namespace fracgelfand
