#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "lpball/cli.hpp"

namespace fs = std::filesystem;
using namespace lpball;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "lpball");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("lpball_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  std::size_t entries() const { return static_cast<std::size_t>(std::distance(fs::directory_iterator(path_), {})); }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

const char* kSmallClt = R"({
  "kind": "clt",
  "params": {"p": 2, "q": 1},
  "law": {"kind": "dirac0"},
  "n_grid": [256, 1024],
  "samples_per_n": 20000,
  "seed": 7
})";

}  // namespace

TEST(Cli, Constants) {
  const auto r = invoke({"constants", "--p", "2", "--q", "1"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("p,q,m_p,clt_variance,", 0), 0u);
  EXPECT_NE(r.out.find("\n2,1,0.79788456080286507,"), std::string::npos);
}

TEST(Cli, UnknownSubcommandAndBadFlags) {
  auto r = invoke({"frobnicate"});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(lines(r.err), 1u);
  EXPECT_EQ(r.err.rfind("error=config ", 0), 0u);
  r = invoke({"constants", "--p", "-2", "--q", "1"});
  EXPECT_EQ(r.code, 1);
  r = invoke({"rate", "--kind", "ldp_qgtp", "--p", "1", "--q", "2", "--grid", "1:2"});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(lines(r.err), 1u);
  r = invoke({"rate", "--kind", "mdp", "--p", "1", "--q", "2", "--grid", "0:1:3"});
  EXPECT_EQ(r.code, 1);  // q > p has no MDP
}

TEST(Cli, RateGridRendersInfinity) {
  const auto r = invoke({"rate", "--kind", "ldp_qgtp", "--p", "1", "--q", "2", "--grid", "1.0:2.0:100"});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(lines(r.out), 101u);
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "x,rate,speed_kind");
  const double lln = std::sqrt(m_p(1, 2));
  while (std::getline(in, line)) {
    const double x = std::stod(line.substr(0, line.find(',')));
    const bool inf = line.find(",inf,") != std::string::npos;
    EXPECT_EQ(inf, x < lln) << line;
    EXPECT_NE(line.find("n^(p/q)"), std::string::npos);
  }
}

TEST(Cli, Conjugate) {
  const auto r = invoke({"conjugate", "--p", "2", "--q", "1", "--s1", "0.6:0.9:2", "--s2", "1:1.5:3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("s1,s2,value,t1,t2,converged\n", 0), 0u);
  EXPECT_EQ(lines(r.out), 7u);
  EXPECT_EQ(r.out.find("false"), std::string::npos);
}

TEST(Cli, SampleIsDeterministicAcrossThreads) {
  const auto a = invoke({"sample", "--p", "1.5", "--q", "3", "--n", "50", "--count", "3000", "--seed", "11"});
  const auto b =
      invoke({"sample", "--p", "1.5", "--q", "3", "--n", "50", "--count", "3000", "--seed", "11", "--threads", "4"});
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(lines(a.out), 3001u);
  EXPECT_EQ(a.out.rfind("draw_index,value\n", 0), 0u);
  const auto c = invoke({"sample", "--p", "1", "--n", "3", "--count", "5", "--statistic", "points"});
  EXPECT_EQ(c.out.rfind("draw_index,x1,x2,x3\n", 0), 0u);
  // Dirac0 draws lie on the sphere.
  const auto s = invoke({"sample", "--p", "3", "--q", "3", "--n", "40", "--count", "50"});
  std::istringstream in(s.out);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) EXPECT_NEAR(std::stod(line.substr(line.find(',') + 1)), 1.0, 1e-12);
}

TEST(Cli, OutputDirWritesAtomically) {
  TempDir d;
  const auto r = invoke({"constants", "--p", "3", "--q", "2", "--output-dir", d.path().string()});
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(r.out.empty());
  EXPECT_TRUE(fs::exists(d.path() / "constants.csv"));
  EXPECT_EQ(d.entries(), 1u);
}

TEST(Cli, VerifyPassesAndWritesReports) {
  TempDir d;
  const fs::path cfg = d.path() / "clt_small.json";
  io::write_file_atomic(cfg, kSmallClt);
  const fs::path out = d.path() / "out";
  auto r = invoke({"verify", "--config", cfg.string(), "--output-dir", out.string()});
  ASSERT_EQ(r.code, 0) << r.err << r.out;
  EXPECT_NE(r.out.find("PASS clt_variance"), std::string::npos);
  EXPECT_TRUE(fs::exists(out / "clt_small_report.csv"));
  EXPECT_TRUE(fs::exists(out / "clt_small_summary.json"));
  const std::string csv1 = io::read_file(out / "clt_small_report.csv");

  // Same bytes with more threads; a seed override changes them.
  r = invoke({"verify", "--config", cfg.string(), "--output-dir", out.string(), "--threads", "3"});
  EXPECT_EQ(io::read_file(out / "clt_small_report.csv"), csv1);
  r = invoke({"verify", "--config", cfg.string(), "--output-dir", out.string(), "--seed", "8"});
  EXPECT_NE(io::read_file(out / "clt_small_report.csv"), csv1);
}

TEST(Cli, VerifyUsesEnvironmentOutputDir) {
  TempDir d;
  const fs::path cfg = d.path() / "env_case.json";
  io::write_file_atomic(cfg, kSmallClt);
  const fs::path out = d.path() / "from_env";
  ::setenv(cli::kOutputDirEnv, out.string().c_str(), 1);
  const auto r = invoke({"verify", "--config", cfg.string()});
  ::unsetenv(cli::kOutputDirEnv);
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(fs::exists(out / "env_case_report.csv"));
}

TEST(Cli, VerifyFailureExitsThree) {
  TempDir d;
  std::string text = kSmallClt;
  text.insert(text.rfind('}'), ", \"tolerances\": {\"clt_variance\": 1e-9}");
  const fs::path cfg = d.path() / "strict.json";
  io::write_file_atomic(cfg, text);
  const auto r = invoke({"verify", "--config", cfg.string(), "--output-dir", d.path().string()});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.out.find("FAIL clt_variance"), std::string::npos);
}

TEST(Cli, MalformedConfigLeavesNoOutput) {
  TempDir d;
  const fs::path cfg = d.path() / "bad.json";
  io::write_file_atomic(cfg, R"({"kind": "clt", "params": {"p": 2, "q": 1}, "n_grid": [64, 32],)");
  const fs::path out = d.path() / "out";
  auto r = invoke({"verify", "--config", cfg.string(), "--output-dir", out.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(lines(r.err), 1u);
  EXPECT_FALSE(fs::exists(out));

  io::write_file_atomic(cfg, R"({"kind": "clt", "params": {"p": 2, "q": 1}, "n_grid": [64, 32],
                                 "samples_per_n": 1000, "seed": 1})");
  r = invoke({"verify", "--config", cfg.string(), "--output-dir", out.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("strictly increasing"), std::string::npos);
  EXPECT_FALSE(fs::exists(out));

  r = invoke({"verify", "--config", (d.path() / "missing.json").string()});
  EXPECT_EQ(r.code, 1);
}
