#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "otsknn/grid_io.hpp"
#include "support/ots_oracle.hpp"

using testing_support::data_path;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

// Runs the CLI with stderr folded into the captured output unless `quiet`.
Result run(const std::string& args, bool quiet = false) {
  const std::string cmd = std::string(OTSKNN_CLI) + " " + args + (quiet ? " 2>/dev/null" : " 2>&1");
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("otsknn_cli_test_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void write(const std::string& name, const std::string& text) const { std::ofstream(path(name)) << text; }

  std::filesystem::path dir_;
};

// Drops one CSV column by header name.
std::string without_column(const std::string& csv, const std::string& column) {
  std::istringstream in(csv);
  std::string line, out;
  int drop = -1;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    if (drop < 0)
      for (std::size_t i = 0; i < cells.size(); ++i)
        if (cells[i] == column) drop = static_cast<int>(i);
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (static_cast<int>(i) != drop) out += cells[i] + ",";
    out += "\n";
  }
  return out;
}

}  // namespace

TEST_F(Cli, HelpMatchesGolden) {
  auto r = run("--help", true);
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, otsknn::read_file(data_path("cli_help.txt")));
  for (const char* flag : {"--network", "--annotation", "--demand", "--instances", "--index", "--method", "--k", "--store",
                           "--gap", "--mip-gap", "--time-limit", "--out", "--count", "--seed", "--perturbation", "--out-store",
                           "--workers", "--methods", "--k-grid", "--out-dir", "--config", "--exclude-time-limited",
                           "--bounds-k", "--run", "--format", "--table"})
    EXPECT_NE(r.out.find(flag), std::string::npos) << flag;
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("validate " + data_path("braess3.net") + " --bogus").code, 1);
  auto r = run("solve --network " + data_path("braess3.net") + " --method knn-d --k 0");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("--k"), std::string::npos);
  EXPECT_EQ(run("solve --network " + data_path("braess3.net") + " --method knn-x").code, 1);
  EXPECT_EQ(run("solve --network " + data_path("braess3.net") + " --method knn-d").code, 1);
}

TEST_F(Cli, MutuallyExclusiveDemandSources) {
  write("d.txt", "0 0 100\n");
  auto r = run("solve --network " + data_path("braess3.net") + " --demand " + path("d.txt") + " --instances " + path("d.txt"));
  EXPECT_EQ(r.code, 1);
}

TEST_F(Cli, SolveBraessOpensALine) {
  auto r = run("solve --network " + data_path("braess3.net") + " --method ben", true);
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("open lines 3"), std::string::npos) << r.out;
  auto pos = r.out.find("cost ");
  ASSERT_NE(pos, std::string::npos);
  const double cost = std::stod(r.out.substr(pos + 5));
  EXPECT_LT(cost, 2600.0);
  EXPECT_NEAR(cost, 1000.0, 1e-6);
}

TEST_F(Cli, SolveWithDemandFile) {
  write("d.txt", "0 0 70\n");
  auto r = run("solve --network " + data_path("braess3.net") + " --demand " + path("d.txt") + " --out " + path("res.txt"), true);
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("cost 700"), std::string::npos) << r.out;
  EXPECT_TRUE(std::filesystem::exists(path("res.txt")));
  write("short.txt", "0 70\n");
  EXPECT_EQ(run("solve --network " + data_path("braess3.net") + " --demand " + path("short.txt")).code, 2);
}

TEST_F(Cli, ValidateExitCodes) {
  auto ok = run("validate " + data_path("mesh_a.net"), true);
  EXPECT_EQ(ok.code, 0);
  EXPECT_NE(ok.out.find("valid"), std::string::npos);

  write("bridge.net", "bus 1 0 1\nbus 2 5 0\nbus 3 5 0\ngen 1 1 0 20\nline 1 1 2 1 10 0\nline 2 2 3 1 10 1\n");
  auto bad = run("validate " + path("bridge.net"));
  EXPECT_EQ(bad.code, 4);
  EXPECT_NE(bad.out.find("non-switchable subgraph disconnected"), std::string::npos);

  write("syntax.net", "bus 1 zero 1\n");
  EXPECT_EQ(run("validate " + path("syntax.net")).code, 2);
  EXPECT_EQ(run("validate " + path("missing.net")).code, 2);

  auto m = run("validate " + data_path("case118.m"), true);
  EXPECT_EQ(m.code, 0);
  EXPECT_NE(m.out.find("69 switchable"), std::string::npos) << m.out;
}

TEST_F(Cli, PipelineIsDeterministic) {
  const std::string net = data_path("mesh_a.net");
  ASSERT_EQ(run("generate --network " + net + " --count 8 --seed 5 --out " + path("inst.jsonl")).code, 0);
  ASSERT_EQ(run("train --network " + net + " --instances " + path("inst.jsonl") + " --out-store " + path("store.jsonl")).code, 0);
  std::string aggregates[2];
  for (int i = 0; i < 2; ++i) {
    const auto out = path("run" + std::to_string(i));
    auto r = run("evaluate --network " + net + " --store " + path("store.jsonl") +
                 " --methods ben,knn-d,knn-lp,knn-bm,all-hatm --k-grid 1,3 --workers 2 --bounds-k 3 --out-dir " + out);
    ASSERT_EQ(r.code, 0) << r.out;
    aggregates[i] = without_column(otsknn::read_file(out + "/aggregate.csv"), "mean_time_s");
    for (const char* f : {"instances.csv", "savings.csv", "bounds.csv", "curve_ben.csv", "curve_knn-lp_k3.csv"})
      EXPECT_TRUE(std::filesystem::exists(out + "/" + f)) << f;
  }
  EXPECT_EQ(aggregates[0], aggregates[1]);

  auto csv = run("report --run " + path("run0") + " --format csv", true);
  ASSERT_EQ(csv.code, 0);
  EXPECT_EQ(csv.out, otsknn::read_file(path("run0") + "/aggregate.csv"));
  auto md = run("report --run " + path("run0") + " --format markdown --table savings", true);
  EXPECT_EQ(md.code, 0);
  EXPECT_NE(md.out.find("|"), std::string::npos);
  EXPECT_EQ(run("report --run " + path("nowhere")).code, 2);

  auto b = run("bounds --network " + net + " --store " + path("store.jsonl") + " --k 3", true);
  EXPECT_EQ(b.code, 0);
  EXPECT_NE(b.out.find("ben_lower"), std::string::npos);

  auto s = run("solve --network " + net + " --instances " + path("inst.jsonl") + " --index 2 --method knn-bm --k 3 --store " +
                   path("store.jsonl"),
               true);
  EXPECT_EQ(s.code, 0) << s.out;
  EXPECT_NE(s.out.find("cost "), std::string::npos);
}

TEST_F(Cli, StoreForOtherNetworkIsRejected) {
  ASSERT_EQ(run("generate --network " + data_path("braess3.net") + " --count 3 --seed 1 --out " + path("i.jsonl")).code, 0);
  ASSERT_EQ(run("train --network " + data_path("braess3.net") + " --instances " + path("i.jsonl") + " --out-store " +
                path("s.jsonl"))
                .code,
            0);
  auto r = run("evaluate --network " + data_path("mesh_a.net") + " --store " + path("s.jsonl") +
               " --methods ben --out-dir " + path("run"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("network hash"), std::string::npos);
}

TEST_F(Cli, ConfigFileDrivesEvaluate) {
  const std::string net = data_path("braess_chain.net");
  ASSERT_EQ(run("generate --network " + net + " --count 6 --seed 2 --out " + path("i.jsonl")).code, 0);
  ASSERT_EQ(run("train --network " + net + " --instances " + path("i.jsonl") + " --out-store " + path("s.jsonl")).code, 0);
  write("bench.cfg", "methods = ben, knn-b\nk_grid = 2\ngap = 1e-4\n");
  auto r = run("evaluate --network " + net + " --store " + path("s.jsonl") + " --config " + path("bench.cfg") +
               " --out-dir " + path("run"));
  ASSERT_EQ(r.code, 0) << r.out;
  auto agg = otsknn::read_file(path("run") + "/aggregate.csv");
  EXPECT_NE(agg.find("knn-b,2,6"), std::string::npos) << agg;
  write("broken.cfg", "methods = nope\n");
  EXPECT_EQ(run("evaluate --network " + net + " --store " + path("s.jsonl") + " --config " + path("broken.cfg") +
                " --out-dir " + path("run2"))
                .code,
            2);
}
