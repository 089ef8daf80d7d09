#include "glarma/cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace glarma;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "glarma");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int status = run_command(static_cast<int>(argv.size()), argv.data(), out, err);
  return {status, out.str(), err.str()};
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "glarma_test_cli" / name;
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int data_rows(const fs::path& p) {
  int n = 0;
  std::istringstream in(slurp(p));
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    ++n;
  }
  return n;
}

const std::string kData = std::string(GLARMA_TEST_DATA) + "/appendix_means.csv";

}  // namespace

TEST(Cli, SimulateThenFitIsIndependentOfWorkers) {
  const auto sim = scratch_dir("sim");
  ASSERT_EQ(run({"simulate", "--scenario", "T=12,J=4,I=2,gamma=0.4,nonnull=3", "--reps", "1", "--seed", "5", "--out",
                 sim.string()})
                .status,
            0);
  ASSERT_TRUE(fs::exists(sim / "panel_1.csv"));
  ASSERT_TRUE(fs::exists(sim / "truth_1.csv"));
  EXPECT_EQ(data_rows(sim / "panel_1.csv"), 12 * 2 * 4);

  const auto a = scratch_dir("fit1"), b = scratch_dir("fit4");
  const std::string panel = (sim / "panel_1.csv").string();
  ASSERT_EQ(run({"fit", panel, "--subsamples", "30", "--seed", "9", "--workers", "1", "--out", a.string()}).status, 0);
  ASSERT_EQ(run({"fit", panel, "--subsamples", "30", "--seed", "9", "--workers", "4", "--out", b.string()}).status, 0);
  for (const char* f : {"gamma_trace.csv", "frequencies.csv", "eta_hat.csv", "support.csv", "summary.json"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  EXPECT_EQ(data_rows(a / "frequencies.csv"), 24);
  EXPECT_NE(slurp(a / "frequencies.csv").find("# fit.n_subsamples = 30"), std::string::npos);
}

TEST(Cli, FitPerGroup) {
  const auto out = scratch_dir("groups");
  const auto r = run({"fit", kData, "--group-column", "population", "--q", "0", "--subsamples", "20", "--out",
                      out.string(), "--timing"});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_TRUE(fs::exists(out / "npoly" / "eta_hat.csv"));
  EXPECT_TRUE(fs::exists(out / "poly" / "eta_hat.csv"));
  EXPECT_TRUE(fs::exists(out / "timing.csv"));
  EXPECT_EQ(data_rows(out / "poly" / "gamma_trace.csv"), 1);
}

TEST(Cli, BenchmarkAndExport) {
  const auto out = scratch_dir("bench");
  const auto r = run({"benchmark", "--scenario", "T=10,J=4,I=2,gamma=0.3,nonnull=3", "--reps", "2", "--methods",
                      "q0,classical", "--subsamples", "20", "--out", out.string()});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(data_rows(out / "metrics.csv"), 2 * 2 * 9);
  EXPECT_EQ(data_rows(out / "replicates.csv"), 4);
  const auto plots = scratch_dir("plots");
  ASSERT_EQ(run({"export-plot-data", "--in", out.string(), "--out", plots.string()}).status, 0);
  EXPECT_EQ(data_rows(plots / "roc.csv"), 2 * 9);
  EXPECT_EQ(data_rows(plots / "max_diff.csv"), 4);
}

TEST(Cli, Filter) {
  const auto out = scratch_dir("filter");
  ASSERT_EQ(run({"filter", kData, "--group-column", "population", "--out", out.string()}).status, 0);
  EXPECT_EQ(data_rows(out / "filter.csv"), 42);
  EXPECT_GT(data_rows(out / "kept_counts.csv"), 0);
}

TEST(Cli, ErrorsAreOneLine) {
  const auto out = scratch_dir("errors");
  auto r = run({"fit"});
  EXPECT_EQ(r.status, 2);
  r = run({"fit", "--bogus", "x"});
  EXPECT_EQ(r.status, 2);
  r = run({"fit", "/nonexistent/counts.csv", "--out", out.string()});
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(r.err.rfind("error: ", 0), 0u);
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);

  const auto cfg = fs::temp_directory_path() / "glarma_test_cli" / "bad.cfg";
  fs::create_directories(cfg.parent_path());
  std::ofstream(cfg) << "fit.nonsense = 1\n";
  r = run({"fit", kData, "--config", cfg.string(), "--out", out.string()});
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("fit.nonsense"), std::string::npos);

  r = run({"fit", kData, "--expansion", "dense", "--out", out.string()});
  EXPECT_EQ(r.status, 1);
  r = run({"simulate", "--scenario", "T=10,foo=2", "--out", out.string()});
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(run({"--help"}).status, 0);
}
