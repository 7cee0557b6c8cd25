#pragma once

// Result files and the Bessel-zero cache. Every file is written to a
// temporary sibling first and renamed into place.

#include "fracgelfand/specfun.hpp"
#include "fracgelfand/spectral_ball.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

namespace fracgelfand {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw IoError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
  }
}

/// 17 significant digits: enough to round-trip any double. Locale-independent.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Bessel zeros keyed by (nu, k), persisted as "nu,k,zero" CSV rows.
///
/// On load every entry gets one Newton step; entries that move by more than
/// 1e-9 relative are dropped and recomputed on demand, and the file is then
/// rewritten. After loading, lookups only read the table, so one loaded
/// cache may serve concurrent readers.
class ZeroCache {
 public:
  ZeroCache() = default;
  explicit ZeroCache(std::filesystem::path path) : path_(std::move(path)) { load(); }

  const std::filesystem::path& path() const { return path_; }
  int computed() const { return computed_; }    ///< zeros found by root finding
  int corrected() const { return corrected_; }  ///< cached entries rejected on load
  bool dirty() const { return dirty_; }

  /// First `count` zeros of J_nu; computes and remembers missing ones.
  std::vector<double> zeros(double nu, int count) {
    if (std::abs(2.0 * nu - std::round(2.0 * nu)) > 1e-12) throw DomainError("ZeroCache stores half-integer orders only");
    auto& row = table_[key(nu)];
    if (static_cast<int>(row.size()) < count) row.resize(static_cast<std::size_t>(count), 0.0);
    if (std::find(row.begin(), row.begin() + count, 0.0) != row.begin() + count) {
      const auto fresh = specfun::bessel_j_zeros(specfun::BesselOrder(nu), count);
      computed_ += count;
      std::copy(fresh.begin(), fresh.end(), row.begin());
      dirty_ = true;
    }
    return {row.begin(), row.begin() + count};
  }

  ZeroSource source() {
    return [this](double nu, int count) { return zeros(nu, count); };
  }

  void save() {
    if (path_.empty() || !dirty_) return;
    std::string out = "nu,k,zero\n";
    for (const auto& [nu_key, row] : table_)
      for (std::size_t k = 0; k < row.size(); ++k)
        if (row[k] > 0.0) out += format_double(from_key(nu_key)) + "," + std::to_string(k + 1) + "," + format_double(row[k]) + "\n";
    atomic_write(path_, out);
    dirty_ = false;
  }

 private:
  // Bessel orders are half-integers n/2 - 1 (or their shifts): key by 2*nu.
  static long key(double nu) { return std::lround(2.0 * nu); }
  static double from_key(long k) { return 0.5 * static_cast<double>(k); }

  void load() {
    std::ifstream in(path_);
    if (!in) return;
    std::string line;
    int lineno = 0;
    bool bad = false;
    while (std::getline(in, line)) {
      ++lineno;
      if (lineno == 1 && line.rfind("nu,", 0) == 0) continue;
      if (line.empty()) continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream row(line);
      double nu = 0.0, zero = 0.0;
      long k = 0;
      if (!(row >> nu >> k >> zero) || k < 1 || k > 1000000 || !(zero > 0.0) || std::abs(2.0 * nu - std::lround(2.0 * nu)) > 1e-12 || nu < 0.0 || nu > 60.0) {
        bad = true;
        continue;
      }
      const double step = specfun::bessel_j_zero_newton_step(specfun::BesselOrder(nu), zero);
      auto& r = table_[key(nu)];
      if (static_cast<long>(r.size()) < k) r.resize(static_cast<std::size_t>(k), 0.0);
      if (!std::isfinite(step) || std::abs(step - zero) > 1e-9 * zero) {
        ++corrected_;
        bad = true;
        continue;  // slot stays 0 and is recomputed on first use
      }
      r[static_cast<std::size_t>(k - 1)] = zero;
    }
    // A valid zero of the wrong index would pass the Newton test; zeros must
    // at least be strictly increasing.
    for (auto& [nu_key, r] : table_) {
      double prev = 0.0;
      for (double& z : r) {
        if (z == 0.0) continue;
        if (z <= prev) {
          std::fill(r.begin(), r.end(), 0.0);
          ++corrected_;
          bad = true;
          break;
        }
        prev = z;
      }
    }
    if (bad) dirty_ = true;
  }

  std::filesystem::path path_;
  std::map<long, std::vector<double>> table_;
  int computed_ = 0;
  int corrected_ = 0;
  bool dirty_ = false;
};

}  // namespace fracgelfand
