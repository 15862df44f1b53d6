#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "typeiia/cli.hpp"

using namespace typeiia;
namespace fs = std::filesystem;

namespace {

const std::string kRoot = TYPEIIA_SOURCE_DIR;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("typeiia_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(CliTest, SymbolCanonical) {
  const Result r = run({"symbol", "--canonical"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "1 1 1 1 0 PASS\n");
  const Result seeded = run({"symbol", "--seed", "11"});
  EXPECT_EQ(seeded.code, 0);
  EXPECT_NE(seeded.out.find("1 1 1 1 0 PASS"), std::string::npos);
}

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"verify"}).code, 2);
  EXPECT_EQ(run({"flow", "--model", "nil", "--alpha0", "1"}).code, 2);
  EXPECT_EQ(run({"flow", "--model", "nil", "--dt", "-1"}).code, 2);
  EXPECT_EQ(run({"flow", "--model", "no_such_model"}).code, 2);
  EXPECT_EQ(run({"oracle", "--model", "torus", "--a0", "1"}).code, 0);
}

TEST_F(CliTest, MalformedModelFileNamesTheLine) {
  const Result r = run({"verify", "--model", kRoot + "/tests/data/malformed.model"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("line 4"), std::string::npos) << r.err;
  const Result j = run({"verify", "--model", kRoot + "/tests/data/not_closed.model"});
  EXPECT_EQ(j.code, 2);
}

TEST_F(CliTest, VerifyWritesPassingReport) {
  const Result r = run({"verify", "--model", "nil", "--trials", "10", "--seed", "7", "--out", path("v.json")});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  const auto j = nlohmann::json::parse(slurp(path("v.json")));
  EXPECT_TRUE(j["pass"].get<bool>());
  EXPECT_EQ(j["engine_version"], kEngineVersion);
  EXPECT_EQ(j["config"]["seed"], 7);
  for (const auto& [name, v] : j["identities"].items()) EXPECT_LT(v["max_residual"].get<double>(), 1e-9) << name;
  EXPECT_EQ(run({"verify", "--model", "torus", "--trials", "5"}).code, 0);
  EXPECT_EQ(run({"verify", "--model", kRoot + "/models/solv.model", "--trials", "5"}).code, 0);
}

TEST_F(CliTest, VerifyFailsWhenToleranceIsImpossible) {
  // Residuals are around 1e-13, so a zero-width gate has to fail.
  EXPECT_EQ(run({"verify", "--model", "nil", "--trials", "3", "--tol", "1e-300"}).code, 1);
}

TEST_F(CliTest, FlowNilCsvAndSummary) {
  const Result r = run({"flow", "--model", "nil", "--a0", "0", "--b0", "0", "--dt", "1e-3", "--tmax", "1", "--record-every",
                        "100", "--out", path("nil.csv"), "--summary", path("nil.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = slurp(path("nil.csv"));
  std::istringstream in(csv);
  std::string line, header, last;
  std::vector<std::string> comments;
  while (std::getline(in, line)) {
    if (line.rfind("#", 0) == 0) comments.push_back(line);
    else if (header.empty()) header = line;
    else last = line;
  }
  ASSERT_GE(comments.size(), 3u);
  EXPECT_EQ(comments[0], std::string("# typeiia ") + kEngineVersion);
  EXPECT_NE(comments[2].find("\"seed\""), std::string::npos);
  EXPECT_EQ(header.rfind("t,a,b,u,normSq,normNsq,", 0), 0u) << header;
  std::istringstream row(last);
  std::string t, a;
  std::getline(row, t, ',');
  std::getline(row, a, ',');
  EXPECT_EQ(std::stod(t), 1.0);
  EXPECT_NEAR(std::stod(a), 8.0, 1e-8);

  const auto s = nlohmann::json::parse(slurp(path("nil.json")));
  EXPECT_TRUE(s["monotonicity"]["pass"].get<bool>());
  EXPECT_FALSE(s["blowup"]["detected"].get<bool>());
  EXPECT_LT(s["oracle"]["param_deviation"].get<double>(), 1e-8);
}

TEST_F(CliTest, DeterministicOutput) {
  const std::vector<std::string> args = {"flow", "--model", "solv", "--tmax", "0.05", "--seed", "3", "--out"};
  auto a = args, b = args;
  a.push_back(path("a.csv"));
  b.push_back(path("b.csv"));
  ASSERT_EQ(run(a).code, 0);
  ASSERT_EQ(run(b).code, 0);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
  // Random initial data for a file model comes from the seed.
  const std::string m = kRoot + "/tests/data/solv_unit.model";
  ASSERT_EQ(run({"flow", "--model", m, "--tmax", "0.01", "--seed", "5", "--out", path("c.csv")}).code, 0);
  ASSERT_EQ(run({"flow", "--model", m, "--tmax", "0.01", "--seed", "5", "--out", path("d.csv")}).code, 0);
  ASSERT_EQ(run({"flow", "--model", m, "--tmax", "0.01", "--seed", "6", "--out", path("e.csv")}).code, 0);
  EXPECT_EQ(slurp(path("c.csv")), slurp(path("d.csv")));
  EXPECT_NE(slurp(path("c.csv")), slurp(path("e.csv")));
}

TEST_F(CliTest, ConfigFileAndPrecedence) {
  {
    std::ofstream cfg(path("cfg.json"));
    cfg << R"({"model": "nil", "a0": 1, "b0": 0.2, "dt": 0.01, "tmax": 0.1, "record_every": 5})";
  }
  ASSERT_EQ(run({"flow", "--config", path("cfg.json"), "--out", path("x.csv")}).code, 0);
  EXPECT_NE(slurp(path("x.csv")).find("\"initial\":{\"a\":1.0,\"b\":0.2}"), std::string::npos);
  // The command line wins over the file.
  ASSERT_EQ(run({"flow", "--config", path("cfg.json"), "--b0", "0.1", "--out", path("y.csv")}).code, 0);
  const std::string y = slurp(path("y.csv"));
  EXPECT_NE(y.find("\"initial\":{\"a\":1.0,\"b\":0.1}"), std::string::npos) << y.substr(0, 300);

  {
    std::ofstream bad(path("bad.json"));
    bad << R"({"model": "nil", "warp_factor": 9})";
  }
  const Result r = run({"flow", "--config", path("bad.json")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("warp_factor"), std::string::npos) << r.err;
  {
    std::ofstream broken(path("broken.json"));
    broken << "{ not json";
  }
  EXPECT_EQ(run({"flow", "--config", path("broken.json")}).code, 2);
}

TEST_F(CliTest, BlowupExitCodes) {
  // Expected singularity: exit 0 with a bracket on stderr.
  const Result solv = run({"flow", "--model", "solv", "--alpha0", "1", "--beta0", "1", "--gamma0", "0.5", "--delta0", "0.4",
                           "--dt", "1e-3", "--tmax", "0.2", "--out", path("s.csv")});
  EXPECT_EQ(solv.code, 0);
  EXPECT_NE(solv.err.find("blow-up"), std::string::npos);
  // Same kind of singularity in a model with no closed form: unexpected, exit 1.
  const Result unit = run({"flow", "--model", kRoot + "/tests/data/solv_unit.model", "--dt", "1e-3", "--tmax", "1", "--out",
                           path("u.csv")});
  EXPECT_EQ(unit.code, 1);
  EXPECT_NE(unit.err.find("blow-up"), std::string::npos);
}

TEST_F(CliTest, OracleSolvBracket) {
  const Result r = run({"oracle", "--model", "solv", "--alpha0", "1", "--beta0", "1", "--gamma0", "0.5", "--delta0", "0.4"});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("bracket_contains_T yes"), std::string::npos);
  EXPECT_NE(r.out.find("PASS"), std::string::npos);
}

TEST_F(CliTest, GridSnapshotsAndSummary) {
  const Result r = run({"grid", "--n", "32", "--tmax", "0.05", "--snapshot", "0.02", "--snapshot-out", path("snap"),
                        "--summary", path("g.json"), "--out", path("g.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(path("snap_0.csv")));
  const auto s = nlohmann::json::parse(slurp(path("g.json")));
  EXPECT_EQ(s["d_max_change"].get<double>(), 0.0);
  EXPECT_TRUE(s["min_det_nondecreasing"].get<bool>());
  EXPECT_NE(slurp(path("g.csv")).find("# command grid"), std::string::npos);
  // Non-positive initial data.
  EXPECT_NE(run({"grid", "--n", "16", "--a", "1", "--b", "1", "--c", "0,1:2:0", "--tmax", "0.01"}).code, 0);
}

}  // namespace
