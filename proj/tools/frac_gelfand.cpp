// Command-line front end: branch, verify, lambda-star, table, extremal.
//
// Exit codes: 0 all requested checks passed, 1 a check failed,
// 2 bad configuration or usage, 3 runtime failure.

#include "fracgelfand/config.hpp"
#include "fracgelfand/experiments.hpp"
#include "fracgelfand/persist.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace fg = fracgelfand;

namespace {

struct Overrides {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> values;  ///< in command-line order

  fg::ExperimentConfig resolve() const {
    fg::ExperimentConfig cfg = config_path.empty() ? fg::ExperimentConfig{} : fg::load_config(config_path);
    for (const auto& [key, value] : values) {
      try {
        fg::set_config_key(cfg, key, value);
      } catch (const fg::ConfigError& e) {
        throw fg::ConfigError(std::string("--") + key + ": " + e.what());
      }
    }
    fg::validate_config(cfg);
    return cfg;
  }
};

void add_config_flags(CLI::App* app, Overrides& ov) {
  app->add_option("-c,--config", ov.config_path, "key=value configuration file")->check(CLI::ExistingFile);
  for (const auto& key : fg::config_keys()) {
    std::string names = "--" + key;
    if (key.find('_') != std::string::npos) {
      std::string dashed = key;
      std::replace(dashed.begin(), dashed.end(), '_', '-');
      names += ",--" + dashed;
    }
    app->add_option_function<std::string>(names, [&ov, key](const std::string& v) { ov.values.emplace_back(key, v); },
                                          "overrides config key '" + key + "'");
  }
}

/// Zero cache named by FRAC_GELFAND_CACHE, if set.
std::unique_ptr<fg::ZeroCache> open_cache() {
  const char* path = std::getenv("FRAC_GELFAND_CACHE");
  if (!path || !*path) return nullptr;
  auto cache = std::make_unique<fg::ZeroCache>(path);
  if (cache->corrected() > 0) std::cerr << "zero cache: " << cache->corrected() << " stale entries will be recomputed\n";
  return cache;
}

void close_cache(fg::ZeroCache* cache) {
  if (!cache) return;
  cache->save();
}

int cmd_branch(const Overrides& ov) {
  const auto cfg = ov.resolve();
  auto cache = open_cache();
  const auto run = fg::run_branch(cfg, cache.get());
  close_cache(cache.get());
  std::cout << run.summary.dump(2) << "\n";
  if (!run.failure.empty()) {
    std::cerr << "branch: " << run.failure << "\n";
    return 1;
  }
  const auto problems = fg::branch_violations(run.branch, cfg.tolerances);
  for (const auto& p : problems) std::cerr << "branch: " << p << "\n";
  return problems.empty() ? 0 : 1;
}

int cmd_verify(const Overrides& ov) {
  const auto cfg = ov.resolve();
  auto cache = open_cache();
  const auto report = fg::run_verify(cfg, cache.get(), [](const fg::CheckResult& c) {
    std::cout << fg::to_string(c.status) << "  " << c.name;
    if (!std::isnan(c.value)) std::cout << "  value=" << fg::format_double(c.value) << "  threshold=" << fg::format_double(c.threshold);
    if (!c.detail.empty()) std::cout << "  (" << c.detail << ")";
    std::cout << std::endl;
  });
  close_cache(cache.get());
  return report.all_pass() ? 0 : 1;
}

int cmd_lambda_star(const Overrides& ov) {
  const auto cfg = ov.resolve();
  auto cache = open_cache();
  const auto j = fg::run_lambda_star(cfg, cache.get());
  close_cache(cache.get());
  std::cout << j.dump(2) << "\n";
  // Without a fold there is nothing to cross-check against.
  return j["fold_lambda"].is_null() || j["consistent"].get<bool>() ? 0 : 1;
}

int cmd_table(const Overrides& ov, int n_lo, int n_hi, int s_count) {
  const auto cfg = ov.resolve();
  const std::string csv = fg::exponent_table(n_lo, n_hi, s_count);
  fg::atomic_write(std::filesystem::path(cfg.out_dir) / "table.csv", csv);
  std::cout << csv;
  return 0;
}

int cmd_extremal(const Overrides& ov) {
  const auto cfg = ov.resolve();
  auto cache = open_cache();
  const auto run = fg::run_extremal(cfg, cache.get());
  close_cache(cache.get());
  std::cout << run.json.dump(2) << "\n";
  bool ok = run.report.riesz_pass || 2.0 * cfg.s >= cfg.n;
  for (const auto& [beta, m] : run.report.lemma_a_margins) ok = ok && m > 0.0;
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral solver for the fractional Gelfand problem on the unit ball"};
  app.require_subcommand(1);

  Overrides branch_ov, verify_ov, star_ov, table_ov, extremal_ov;
  auto* branch = app.add_subcommand("branch", "continue the minimal branch; writes branch.csv and summary.json");
  auto* verify = app.add_subcommand("verify", "run the named verification checks; writes verify.json");
  auto* star = app.add_subcommand("lambda-star", "bracket lambda* and compare with the fold; writes lambda_star.json");
  auto* table = app.add_subcommand("table", "critical dimension and decay bound over an (n, s) grid; writes table.csv");
  auto* extremal = app.add_subcommand("extremal", "extremal solution, decay fits and regularity report; writes extremal.json");
  add_config_flags(branch, branch_ov);
  add_config_flags(verify, verify_ov);
  add_config_flags(star, star_ov);
  add_config_flags(table, table_ov);
  add_config_flags(extremal, extremal_ov);
  int n_lo = 2, n_hi = 20, s_count = 4;
  table->add_option("--n-min", n_lo, "smallest dimension")->capture_default_str();
  table->add_option("--n-max", n_hi, "largest dimension")->capture_default_str();
  table->add_option("--s-count", s_count, "number of s values k / count, k = 1..count")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*branch) return cmd_branch(branch_ov);
    if (*verify) return cmd_verify(verify_ov);
    if (*star) return cmd_lambda_star(star_ov);
    if (*table) return cmd_table(table_ov, n_lo, n_hi, s_count);
    if (*extremal) return cmd_extremal(extremal_ov);
  } catch (const fg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const fg::DomainError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
