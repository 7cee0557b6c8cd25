#include "fracgelfand/config.hpp"
#include "fracgelfand/experiments.hpp"
#include "fracgelfand/persist.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <unistd.h>

using namespace fracgelfand;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() / (std::string("fg_") + info->test_suite_name() + "_" + info->name() + "_" + std::to_string(::getpid()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string cell;
  while (std::getline(in, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

TEST(Config, DefaultsAreFilledIn) {
  const auto c = parse_config("n=3\ns=0.5\nf=exp\n");
  EXPECT_EQ(c.n, 3);
  EXPECT_EQ(c.s, 0.5);
  EXPECT_EQ(c.modes, 256);
  EXPECT_EQ(c.effective_quad_order(), 1024);
  EXPECT_EQ(c.tolerances.newton_tol, SolverOptions{}.newton_tol);
  EXPECT_EQ(c.checks, all_checks());
  EXPECT_EQ(c.t_grid().size(), 31u);
  EXPECT_EQ(c.t_grid().back(), 3.0);
}

TEST(Config, CommentsBlankLinesAndWhitespace) {
  const auto c = parse_config("# header\n\n  n = 5   # trailing\nmodes=64\r\nt_max = 2.5\nseed=42\nfilter_order=0\n");
  EXPECT_EQ(c.n, 5);
  EXPECT_EQ(c.modes, 64);
  EXPECT_EQ(c.t_max, 2.5);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.tolerances.filter.order, 0);
}

TEST(Config, OrderOutsideRangeNamesTheField) {
  const std::string msg = error_of("s=1.5");
  EXPECT_NE(msg.find("s must lie in (0,1]"), std::string::npos) << msg;
  EXPECT_NE(error_of("s=0").find("s must lie"), std::string::npos);
  EXPECT_NE(error_of("n=1").find("n must be >= 2"), std::string::npos);
  EXPECT_NE(error_of("modes=4").find("modes"), std::string::npos);
  EXPECT_NE(error_of("t_steps=1").find("t_steps"), std::string::npos);
  EXPECT_NE(error_of("t_max=-1").find("t_max"), std::string::npos);
  EXPECT_NE(error_of("modes=64\nquad_order=100").find("quad_order"), std::string::npos);
  EXPECT_NE(error_of("perturb_mu2=0").find("perturb_mu2"), std::string::npos);
}

TEST(Config, ParseErrorsCarryLineNumbers) {
  EXPECT_EQ(error_of("n=3\nthis is not a pair\n"), "line 2: expected key=value");
  EXPECT_EQ(error_of("n=3\n\nsize=4"), "line 3: unknown key 'size'");
  EXPECT_EQ(error_of("modes=12x"), "line 1: bad value '12x' for modes");
  EXPECT_EQ(error_of("s="), "line 1: bad value '' for s");
  EXPECT_EQ(error_of("checks=flux_constant,nope"), "line 1: unknown check 'nope'");
}

TEST(Config, NonlinearitySpecIsValidated) {
  const auto c = parse_config("f=power:2");
  const auto f = Nonlinearity::parse(c.f_spec);
  EXPECT_EQ(f(0.0), 1.0);
  EXPECT_EQ(f(1.0), 4.0);
  EXPECT_NE(error_of("f=power:0.5").find("f:"), std::string::npos);
  EXPECT_NE(error_of("f=sin").find("f:"), std::string::npos);
}

TEST(Config, CheckLists) {
  EXPECT_TRUE(parse_config("checks=").checks.empty());
  const auto two = parse_config("checks = orthonormality , flux_constant");
  EXPECT_EQ(two.checks, (std::vector<std::string>{"orthonormality", "flux_constant"}));
  EXPECT_EQ(parse_config("checks=all").checks, all_checks());
}

TEST(Config, LaterAssignmentsOverride) {
  auto c = parse_config("modes=64\nmodes=32");
  EXPECT_EQ(c.modes, 32);
  set_config_key(c, "modes", "128");
  EXPECT_EQ(c.modes, 128);
  EXPECT_THROW(set_config_key(c, "bogus", "1"), ConfigError);
  for (const auto& key : config_keys()) EXPECT_NO_THROW(set_config_key(c, key, key == "f" ? "exp" : key == "checks" || key == "out_dir" ? "" : "1")) << key;
}

TEST(Config, LoadFromFile) {
  TempDir dir;
  const auto p = dir.path() / "run.cfg";
  std::ofstream(p) << "n=4\ns=0.3\n";
  const auto c = load_config(p.string());
  EXPECT_EQ(c.n, 4);
  EXPECT_EQ(c.s, 0.3);
  std::ofstream(p) << "n=4\ns=3\n";
  try {
    load_config(p.string());
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("run.cfg: s must lie"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_config((dir.path() / "missing.cfg").string()), ConfigError);
}

TEST(Persist, FormatDoubleRoundTrips) {
  detail::UnitStream rnd(5);
  for (int i = 0; i < 1000; ++i) {
    const double x = std::ldexp(rnd() - 0.5, static_cast<int>(rnd() * 200) - 100);
    const double back = std::strtod(format_double(x).c_str(), nullptr);
    EXPECT_EQ(std::memcmp(&x, &back, sizeof x), 0) << format_double(x);
  }
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(std::nan("")), "nan");
  EXPECT_EQ(format_double(-HUGE_VAL), "-inf");
}

TEST(Persist, AtomicWriteReplacesAndLeavesNoTemporaries) {
  TempDir dir;
  const auto p = dir.path() / "nested" / "deeper" / "out.txt";
  atomic_write(p, "first");
  EXPECT_EQ(slurp(p), "first");
  atomic_write(p, "second");
  EXPECT_EQ(slurp(p), "second");
  int files = 0;
  for (const auto& e : fs::directory_iterator(p.parent_path())) {
    ++files;
    EXPECT_EQ(e.path().filename(), "out.txt");
  }
  EXPECT_EQ(files, 1);
  EXPECT_THROW(atomic_write(dir.path() / "nested", "x"), IoError);
}

TEST(ZeroCacheTest, ColdThenWarmGivesIdenticalZeros) {
  TempDir dir;
  const auto p = dir.path() / "zeros.csv";
  std::vector<double> cold_half, cold_zero;
  {
    ZeroCache cold(p);
    cold_half = cold.zeros(0.5, 40);
    cold_zero = cold.zeros(0.0, 10);
    EXPECT_EQ(cold.computed(), 50);
    EXPECT_EQ(cold.zeros(0.5, 20), std::vector<double>(cold_half.begin(), cold_half.begin() + 20));
    EXPECT_EQ(cold.computed(), 50);
    cold.save();
  }
  EXPECT_EQ(slurp(p).rfind("nu,k,zero\n", 0), 0u);
  ZeroCache warm(p);
  EXPECT_EQ(warm.zeros(0.5, 40), cold_half);
  EXPECT_EQ(warm.zeros(0.0, 10), cold_zero);
  EXPECT_EQ(warm.computed(), 0);
  EXPECT_EQ(warm.corrected(), 0);
  EXPECT_FALSE(warm.dirty());
  for (int k = 0; k < 40; ++k) EXPECT_NEAR(cold_half[static_cast<std::size_t>(k)], (k + 1) * std::numbers::pi, 1e-12);
  EXPECT_THROW(warm.zeros(0.3, 2), DomainError);
}

TEST(ZeroCacheTest, HandEditedZeroIsCorrected) {
  TempDir dir;
  const auto p = dir.path() / "zeros.csv";
  std::vector<double> truth;
  {
    ZeroCache c(p);
    truth = c.zeros(0.5, 5);
    c.save();
  }
  std::string text = slurp(p);
  const std::string good = format_double(truth[2]);
  text.replace(text.find(good), good.size(), "9.5");
  std::ofstream(p) << text;

  ZeroCache edited(p);
  EXPECT_EQ(edited.corrected(), 1);
  EXPECT_TRUE(edited.dirty());
  EXPECT_EQ(edited.zeros(0.5, 5), truth);
  edited.save();
  ZeroCache again(p);
  EXPECT_EQ(again.corrected(), 0);
  EXPECT_EQ(again.zeros(0.5, 5), truth);
  EXPECT_EQ(again.computed(), 0);
}

TEST(ZeroCacheTest, CorruptFileIsRecomputedAndOverwritten) {
  TempDir dir;
  const auto p = dir.path() / "zeros.csv";
  std::ofstream(p) << "nu,k,zero\ngarbage\n0.5,2,3.1415926535897931\n0.5,1,6.2831853071795862\n";
  ZeroCache c(p);
  EXPECT_GT(c.corrected(), 0);
  const auto z = c.zeros(0.5, 3);
  EXPECT_NEAR(z[0], std::numbers::pi, 1e-13);
  EXPECT_NEAR(z[2], 3 * std::numbers::pi, 1e-12);
  c.save();
  ZeroCache fresh(p);
  EXPECT_EQ(fresh.corrected(), 0);
  EXPECT_EQ(fresh.zeros(0.5, 3), z);
}

TEST(ZeroCacheTest, ConcurrentReadersSeeConsistentValues) {
  TempDir dir;
  const auto p = dir.path() / "zeros.csv";
  {
    ZeroCache c(p);
    c.zeros(1.5, 64);
    c.save();
  }
  ZeroCache shared(p);
  const auto expected = shared.zeros(1.5, 64);
  std::vector<std::vector<double>> seen(4);
  std::vector<std::thread> pool;
  for (auto& out : seen)
    pool.emplace_back([&shared, &out] {
      for (int rep = 0; rep < 50; ++rep) out = shared.zeros(1.5, 64);
    });
  for (auto& t : pool) t.join();
  for (const auto& v : seen) EXPECT_EQ(v, expected);
  EXPECT_EQ(shared.computed(), 0);
}

TEST(ZeroCacheTest, FeedsTheBasis) {
  TempDir dir;
  ZeroCache c(dir.path() / "zeros.csv");
  const auto cached = BallBasis::build(3, 0.5, 16, 0, c.source());
  const auto direct = BallBasis::build(3, 0.5, 16);
  for (int k = 0; k < 16; ++k) EXPECT_EQ(cached->eigenvalues()[static_cast<std::size_t>(k)], direct->eigenvalues()[static_cast<std::size_t>(k)]);
}

TEST(RunBranch, NearTrivialTwoPointRun) {
  TempDir dir;
  ExperimentConfig cfg = parse_config("modes=32\nt_steps=2\nt_max=1e-9");
  cfg.out_dir = dir.path().string();
  const auto run = run_branch(cfg, nullptr);
  std::istringstream csv(slurp(dir.path() / "branch.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "t,lambda,u0,nu1,h_norm,residual");
  int rows = 0;
  while (std::getline(csv, line)) {
    const auto cells = split(line);
    ASSERT_EQ(cells.size(), 6u);
    EXPECT_LT(std::abs(std::stod(cells[1])), 1e-8);
    ++rows;
  }
  EXPECT_EQ(rows, 2);
  const auto summary = Json::parse(slurp(dir.path() / "summary.json"));
  for (const char* key : {"lambda_star_lo", "lambda_star_hi", "fold_t", "extremal_u0", "critical_dim", "decay_bound", "n", "s", "f_spec", "modes"})
    EXPECT_TRUE(summary.contains(key)) << key;
  EXPECT_NEAR(summary["critical_dim"].get<double>(), 5 + 2 * std::sqrt(3.0), 1e-12);
  EXPECT_NEAR(summary["decay_bound"].get<double>(), 1.5 - 1.0 - std::sqrt(2.0) - 0.5, 1e-12);
  EXPECT_TRUE(summary["fold_t"].is_null());
  EXPECT_EQ(summary["f_spec"], "exp");
  EXPECT_TRUE(run.failure.empty()) << run.failure;
}

TEST(RunBranch, FoldRunIsDeterministicWithSeventeenDigits) {
  TempDir dir;
  ExperimentConfig cfg = parse_config("modes=48");
  cfg.out_dir = (dir.path() / "a").string();
  const auto first = run_branch(cfg, nullptr);
  cfg.out_dir = (dir.path() / "b").string();
  run_branch(cfg, nullptr);
  const std::string a = slurp(dir.path() / "a" / "branch.csv");
  EXPECT_EQ(a, slurp(dir.path() / "b" / "branch.csv"));
  EXPECT_EQ(slurp(dir.path() / "a" / "summary.json"), slurp(dir.path() / "b" / "summary.json"));
  ASSERT_TRUE(first.branch.fold.has_value());
  const auto summary = first.summary;
  EXPECT_LE(summary["lambda_star_lo"].get<double>(), summary["fold_lambda"].get<double>());
  EXPECT_GE(summary["lambda_star_hi"].get<double>(), summary["fold_lambda"].get<double>());

  // Each cell round-trips to the stored value and is printed in %.17g.
  std::istringstream csv(a);
  std::string line;
  std::getline(csv, line);
  std::size_t row = 0;
  while (std::getline(csv, line)) {
    const auto cells = split(line);
    const auto& p = first.branch.points[row++];
    EXPECT_EQ(std::strtod(cells[0].c_str(), nullptr), p.t);
    EXPECT_EQ(std::strtod(cells[1].c_str(), nullptr), p.lambda);
    for (const auto& c : cells) EXPECT_EQ(c, format_double(std::strtod(c.c_str(), nullptr)));
  }
  EXPECT_EQ(row, first.branch.points.size());
}

TEST(RunVerify, EmptyCheckListGivesEmptyReport) {
  TempDir dir;
  ExperimentConfig cfg = parse_config("checks=");
  cfg.out_dir = dir.path().string();
  const auto report = run_verify(cfg, nullptr);
  EXPECT_TRUE(report.checks.empty());
  EXPECT_TRUE(report.all_pass());
  EXPECT_EQ(slurp(dir.path() / "verify.json"), "{}\n");
}

TEST(RunVerify, BasisChecksPassOnCleanBasis) {
  TempDir dir;
  ExperimentConfig cfg = parse_config("modes=32\nchecks=orthonormality,energy_identity,flux_constant,max_principle,lemma_a_grid");
  cfg.out_dir = dir.path().string();
  const auto report = run_verify(cfg, nullptr);
  ASSERT_EQ(report.checks.size(), 5u);
  for (const auto& c : report.checks) {
    EXPECT_EQ(c.status, CheckResult::Status::Pass) << c.name << ": " << c.detail;
    EXPECT_GE(c.margin, 0.0) << c.name;
  }
  const auto j = Json::parse(slurp(dir.path() / "verify.json"));
  EXPECT_EQ(j.begin().key(), "orthonormality");
  EXPECT_EQ(j["flux_constant"]["status"], "pass");
}

TEST(RunVerify, PerturbedEigenvalueIsDetected) {
  TempDir dir;
  ExperimentConfig cfg = parse_config("modes=32\nperturb_mu2=1.1\nchecks=orthonormality,energy_identity");
  cfg.out_dir = dir.path().string();
  const auto report = run_verify(cfg, nullptr);
  ASSERT_EQ(report.checks.size(), 2u);
  EXPECT_EQ(report.checks[0].status, CheckResult::Status::Fail);
  EXPECT_EQ(report.checks[1].status, CheckResult::Status::Fail);
  EXPECT_FALSE(report.all_pass());
}

TEST(RunVerify, ClassicalOrderSkipsExtensionChecks) {
  TempDir dir;
  ExperimentConfig cfg = parse_config("n=2\ns=1\nmodes=32\nchecks=flux_constant,exp_decay_y,phi1_identity,riesz_bound");
  cfg.out_dir = dir.path().string();
  const auto report = run_verify(cfg, nullptr);
  EXPECT_EQ(report.checks[0].status, CheckResult::Status::Skipped);
  EXPECT_EQ(report.checks[1].status, CheckResult::Status::Skipped);
  EXPECT_EQ(report.checks[2].status, CheckResult::Status::Pass) << report.checks[2].detail;
  EXPECT_EQ(report.checks[3].status, CheckResult::Status::Skipped);
  EXPECT_TRUE(report.all_pass());
}

TEST(ExponentTable, RowsAndRegimeFlag) {
  const std::string csv = exponent_table(2, 20, 4);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "n,s,critical_dim,decay_bound,bounded_regime");
  int rows = 0, bounded = 0;
  while (std::getline(in, line)) {
    const auto cells = split(line);
    ++rows;
    const int n = std::stoi(cells[0]);
    const double s = std::stod(cells[1]);
    EXPECT_EQ(std::stod(cells[2]), critical_dimension(s));
    bounded += cells[4] == "1";
    EXPECT_EQ(cells[4] == "1", n < 2 * (s + 2 + std::sqrt(2 * (s + 1))));
  }
  EXPECT_EQ(rows, 19 * 4);
  EXPECT_GT(bounded, 0);
  EXPECT_THROW(exponent_table(1, 3, 2), ConfigError);
}
