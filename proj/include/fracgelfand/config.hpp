#pragma once

// Flat key=value experiment configuration. One pair per line, '#' starts a
// comment, blank lines are ignored. Command-line flags use the same keys
// and are applied after the file.

#include "fracgelfand/branch.hpp"
#include "fracgelfand/nonlinearity.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracgelfand {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Names of the verification checks, in report order.
inline const std::vector<std::string>& all_checks() {
  static const std::vector<std::string> names{
      "flux_constant", "energy_identity", "max_principle",          "orthonormality",
      "riesz_bound",   "lemma_a_grid",    "boundary_rate",          "radial_monotonicity",
      "weighted_key_estimate", "stability_weighted_inequality", "exp_decay_y", "phi1_identity"};
  return names;
}

struct ExperimentConfig {
  int n = 3;
  double s = 0.5;
  std::string f_spec = "exp";
  int modes = 256;
  int quad_order = 0;  ///< 0 selects 4 * modes
  double t_max = 3.0;
  int t_steps = 31;
  std::uint64_t seed = 1;
  SolverOptions tolerances;
  std::string out_dir = ".";
  std::vector<std::string> checks = all_checks();
  std::optional<double> perturb_mu2;  ///< fault injection: scale mu_2 by this factor

  int effective_quad_order() const { return quad_order == 0 ? 4 * modes : quad_order; }
  std::vector<double> t_grid() const {
    std::vector<double> t(static_cast<std::size_t>(t_steps));
    for (int i = 0; i < t_steps; ++i) t[static_cast<std::size_t>(i)] = t_max * i / (t_steps - 1);
    return t;
  }
};

/// Keys understood by set_config_key, for help texts.
inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{"n",          "s",           "f",           "modes",         "quad_order",    "t_max",
                                             "t_steps",    "seed",        "out_dir",     "checks",        "perturb_mu2",   "newton_tol",
                                             "max_newton", "monotone_tol", "max_monotone", "blowup",       "eig_tol",       "bracket_tol",
                                             "filter_order", "filter_strength"};
  return keys;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || ptr != end) throw ConfigError("bad value '" + text + "' for " + key);
  return v;
}

}  // namespace detail

/// Assigns one key; throws ConfigError for unknown keys or unparsable values.
inline void set_config_key(ExperimentConfig& c, const std::string& key, const std::string& raw) {
  using detail::parse_number;
  const std::string v = detail::trim(raw);
  SolverOptions& o = c.tolerances;
  if (key == "n") c.n = parse_number<int>(key, v);
  else if (key == "s") c.s = parse_number<double>(key, v);
  else if (key == "f") c.f_spec = v;
  else if (key == "modes") c.modes = parse_number<int>(key, v);
  else if (key == "quad_order") c.quad_order = parse_number<int>(key, v);
  else if (key == "t_max") c.t_max = parse_number<double>(key, v);
  else if (key == "t_steps") c.t_steps = parse_number<int>(key, v);
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, v);
  else if (key == "out_dir") c.out_dir = v;
  else if (key == "perturb_mu2") c.perturb_mu2 = parse_number<double>(key, v);
  else if (key == "newton_tol") o.newton_tol = parse_number<double>(key, v);
  else if (key == "max_newton") o.max_newton = parse_number<int>(key, v);
  else if (key == "monotone_tol") o.monotone_tol = parse_number<double>(key, v);
  else if (key == "max_monotone") o.max_monotone = parse_number<long>(key, v);
  else if (key == "blowup") o.blowup = parse_number<double>(key, v);
  else if (key == "eig_tol") o.eig_tol = parse_number<double>(key, v);
  else if (key == "bracket_tol") o.bracket_tol = parse_number<double>(key, v);
  else if (key == "filter_order") o.filter.order = parse_number<int>(key, v);
  else if (key == "filter_strength") o.filter.strength = parse_number<double>(key, v);
  else if (key == "checks") {
    c.checks.clear();
    std::istringstream in(v);
    std::string item;
    while (std::getline(in, item, ',')) {
      item = detail::trim(item);
      if (item.empty()) continue;
      if (item == "all") {
        c.checks = all_checks();
        continue;
      }
      if (std::find(all_checks().begin(), all_checks().end(), item) == all_checks().end()) throw ConfigError("unknown check '" + item + "'");
      c.checks.push_back(item);
    }
  } else {
    throw ConfigError("unknown key '" + key + "'");
  }
}

/// Checks the invariants; messages name the offending field.
inline void validate_config(const ExperimentConfig& c) {
  if (c.n < 2) throw ConfigError("n must be >= 2, got " + std::to_string(c.n));
  if (!(c.s > 0.0 && c.s <= 1.0)) throw ConfigError("s must lie in (0,1], got " + std::to_string(c.s));
  if (c.modes < 8) throw ConfigError("modes must be >= 8, got " + std::to_string(c.modes));
  if (c.quad_order != 0 && c.quad_order < 2 * c.modes) throw ConfigError("quad_order must be 0 (auto) or >= 2*modes");
  if (!(c.t_max > 0.0)) throw ConfigError("t_max must be > 0");
  if (c.t_steps < 2) throw ConfigError("t_steps must be >= 2, got " + std::to_string(c.t_steps));
  if (c.perturb_mu2 && !(*c.perturb_mu2 > 0.0)) throw ConfigError("perturb_mu2 must be a positive factor");
  const SolverOptions& o = c.tolerances;
  if (!(o.newton_tol > 0.0) || !(o.monotone_tol > 0.0) || !(o.eig_tol > 0.0) || !(o.bracket_tol > 0.0))
    throw ConfigError("tolerances (newton_tol, monotone_tol, eig_tol, bracket_tol) must be positive");
  if (o.max_newton < 1 || o.max_monotone < 1) throw ConfigError("max_newton and max_monotone must be positive");
  if (!(o.blowup > 0.0)) throw ConfigError("blowup must be positive");
  if (o.filter.order < 0 || !(o.filter.strength >= 0.0)) throw ConfigError("filter_order and filter_strength must be nonnegative");
  try {
    Nonlinearity::parse(c.f_spec);
  } catch (const DomainError& e) {
    throw ConfigError(std::string("f: ") + e.what());
  }
}

/// Parses and validates; parse errors carry "line N:".
inline ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = detail::trim(line.substr(0, eq));
    try {
      set_config_key(c, key, line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  validate_config(c);
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_config(text.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace fracgelfand
