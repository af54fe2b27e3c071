#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "impulse/cli/commands.hpp"

namespace impulse::cli {
namespace {

using io::Json;
using testing::scratch_dir;

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

Json p1_problem() {
  return Json::parse(R"({"builtin": "P1_null_flow", "params": {"alpha": 0.5, "xi_step": 0.04, "xi_max": 4.0}})");
}

Json p2_problem() {
  return Json::parse(R"({"builtin": "P2_adversarial_drift", "params": {"alpha": 0.3, "beta": 0.1}})");
}

Json line(double lo, double hi, int nodes, int steps) {
  return {{"lower", {lo}}, {"upper", {hi}}, {"nodes", {nodes}}, {"time_steps", steps}};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = scratch_dir(std::string("cli_") + info->name());
  }

  /// Writes `doc` as the config and runs `command` with `out` as --out.
  int run(const std::string& command, const Json& doc, const std::string& out, RunOptions options = {}) {
    const auto path = dir_ / (out + ".config.json");
    io::write_json_file(path, doc);
    options.config = path;
    options.out = dir_ / out;
    log_.str("");
    err_.str("");
    return run_command(command, options, log_, err_);
  }

  std::filesystem::path dir_;
  std::ostringstream log_, err_;
};

TEST_F(Cli, SolveWritesFieldAndReports) {
  const Json doc = {{"problem", p1_problem()}, {"grid", line(-2.0, 2.0, 101, 20)}};
  ASSERT_EQ(run("solve", doc, "p1"), kOk) << err_.str();
  for (const char* f : {"manifest.json", "validation.json", "structural.json", "slice_0000.csv", "slice_0020.csv"})
    EXPECT_TRUE(std::filesystem::exists(dir_ / "p1" / f)) << f;
  const Json m = io::read_json_file(dir_ / "p1" / "manifest.json");
  EXPECT_EQ(m.at("tool"), "impulse_qvi");
  EXPECT_EQ(m.at("command"), "solve");
  EXPECT_EQ(m.at("seed"), kDefaultSeed);
  EXPECT_EQ(m.at("config").at("problem"), p1_problem());
  EXPECT_NE(log_.str().find("obstacle"), std::string::npos) << log_.str();
}

TEST_F(Cli, ZeroTimeStepsIsAConfigError) {
  const Json doc = {{"problem", p1_problem()}, {"grid", line(-2.0, 2.0, 11, 0)}};
  EXPECT_EQ(run("solve", doc, "bad"), kConfigError);
  EXPECT_NE(err_.str().find("grid"), std::string::npos) << err_.str();
}

TEST_F(Cli, UnknownFieldIsAConfigError) {
  Json doc = {{"problem", p1_problem()}, {"grid", line(-2.0, 2.0, 11, 4)}, {"sovle", Json::object()}};
  EXPECT_EQ(run("solve", doc, "typo"), kConfigError);
  EXPECT_NE(err_.str().find("sovle"), std::string::npos) << err_.str();
}

TEST_F(Cli, NoVerifyIsRecorded) {
  const Json doc = {{"problem", p1_problem()}, {"grid", line(-2.0, 2.0, 21, 4)}};
  RunOptions o;
  o.no_verify = true;
  ASSERT_EQ(run("solve", doc, "nv", o), kOk) << err_.str();
  const Json m = io::read_json_file(dir_ / "nv" / "manifest.json");
  EXPECT_EQ(m.at("no_verify"), true);
  EXPECT_EQ(m.at("verify"), "skipped");
  EXPECT_FALSE(std::filesystem::exists(dir_ / "nv" / "structural.json"));
}

TEST_F(Cli, FailedAssumptionsStopTheSolve) {
  Json problem = p1_problem();
  problem["params"]["alpha"] = 0.0;
  const Json doc = {{"problem", problem}, {"grid", line(-2.0, 2.0, 21, 4)}};
  EXPECT_EQ(run("solve", doc, "alpha0"), kCheckFailure);
  EXPECT_TRUE(std::filesystem::exists(dir_ / "alpha0" / "validation.json"));
  Json forced = doc;
  forced["solve"] = {{"force", true}};
  EXPECT_EQ(run("solve", forced, "alpha0_forced"), kOk) << err_.str();
}

TEST_F(Cli, SimulateSchedule) {
  Json doc = io::read_json_file(std::filesystem::path(IMPULSE_CONFIG_DIR) / "p1_simulate.json");
  ASSERT_EQ(run("simulate", doc, "sim"), kOk) << err_.str();
  const Json payoff = io::read_json_file(dir_ / "sim" / "payoff.json");
  EXPECT_DOUBLE_EQ(payoff.at("total").get<double>(), 0.5);
  EXPECT_EQ(payoff.at("jumps"), 1);
  EXPECT_EQ(slurp(dir_ / "sim" / "jumps.csv"), "t,xi0,pre0,post0,cost\n0.25,-2,2,0,0.5\n");

  doc["simulate"].erase("schedule");
  ASSERT_EQ(run("simulate", doc, "still"), kOk) << err_.str();
  EXPECT_DOUBLE_EQ(io::read_json_file(dir_ / "still" / "payoff.json").at("total").get<double>(), 2.0);

  doc["simulate"]["schedule"] = Json::parse(R"([{"t": 0.5, "xi": [0.0]}])");
  EXPECT_EQ(run("simulate", doc, "zero"), kConfigError);
}

TEST_F(Cli, SimulatePolicyPlayback) {
  const Json solve_doc = {{"problem", p1_problem()}, {"grid", line(-2.0, 2.0, 101, 20)}};
  ASSERT_EQ(run("solve", solve_doc, "field"), kOk) << err_.str();
  Json doc = {{"problem", p1_problem()},
              {"simulate", {{"x0", {2.0}}, {"dt", 0.01}, {"policy", (dir_ / "field" / "manifest.json").string()}}}};
  ASSERT_EQ(run("simulate", doc, "play"), kOk) << err_.str();
  const Json payoff = io::read_json_file(dir_ / "play" / "payoff.json");
  EXPECT_NEAR(payoff.at("realized_payoff").get<double>(), 0.5, 1e-12);
  EXPECT_NEAR(payoff.at("value_at_start").get<double>(), 0.5, 1e-12);

  doc["simulate"]["policy"] = (dir_ / "missing" / "manifest.json").string();
  EXPECT_EQ(run("simulate", doc, "nopolicy"), kConfigError);
  EXPECT_NE(err_.str().find("not found"), std::string::npos);

  doc["problem"] = p2_problem();
  doc["simulate"]["policy"] = (dir_ / "field").string();
  EXPECT_EQ(run("simulate", doc, "wrong"), kConfigError);
}

TEST_F(Cli, VerifyFreshSolve) {
  const Json solve_doc = {{"problem", p2_problem()}, {"grid", line(-3.0, 3.0, 61, 50)}};
  ASSERT_EQ(run("solve", solve_doc, "p2"), kOk) << err_.str();
  const Json doc = {{"verify", {{"field", (dir_ / "p2").string()}}}};
  ASSERT_EQ(run("verify", doc, "check"), kOk) << err_.str();
  const Json r = io::read_json_file(dir_ / "check" / "residual.json");
  EXPECT_TRUE(r.contains("residual"));
  EXPECT_TRUE(std::filesystem::exists(dir_ / "check" / "residual.csv"));
  EXPECT_NE(log_.str().find("residual max-norm"), std::string::npos);
}

TEST_F(Cli, VerifyRejectsTruncatedField) {
  const Json solve_doc = {{"problem", p2_problem()}, {"grid", line(-3.0, 3.0, 31, 4)}};
  ASSERT_EQ(run("solve", solve_doc, "p2"), kOk) << err_.str();
  const auto slice = dir_ / "p2" / "slice_0002.csv";
  const std::string text = slurp(slice);
  std::ofstream(slice, std::ios::trunc) << text.substr(0, text.size() / 3);
  const Json doc = {{"verify", {{"field", (dir_ / "p2" / "manifest.json").string()}}}};
  EXPECT_EQ(run("verify", doc, "check"), kConfigError);
  EXPECT_NE(err_.str().find("slice_0002.csv"), std::string::npos) << err_.str();
}

TEST_F(Cli, OracleCorpusAndMatchedGame) {
  const Json doc = io::read_json_file(std::filesystem::path(IMPULSE_CONFIG_DIR) / "oracle.json");
  ASSERT_EQ(run("oracle", doc, "oracle"), kOk) << err_.str();
  const Json corpus = io::read_json_file(dir_ / "oracle" / "corpus.json");
  const Json stored =
      io::read_json_file(std::filesystem::path(IMPULSE_TEST_DATA_DIR) / "oracle_corpus" / "corpus.json");
  EXPECT_EQ(corpus, stored);
  EXPECT_NE(log_.str().find("24/24"), std::string::npos) << log_.str();
}

TEST_F(Cli, OracleGuardExit) {
  const Json doc = {{"problem", p2_problem()}, {"oracle", {{"corpus", {{"games", 1}, {"steps", 6}}}}}};
  EXPECT_EQ(run("oracle", doc, "big"), kGuardExceeded);
  EXPECT_NE(err_.str().find("guard"), std::string::npos);
}

TEST_F(Cli, SeedFlagOverridesConfig) {
  const Json doc = {{"problem", p2_problem()}, {"oracle", Json::object()}, {"seed", 5}};
  RunOptions o;
  o.seed = 9;
  ASSERT_EQ(run("oracle", doc, "seeded", o), kOk) << err_.str();
  EXPECT_EQ(io::read_json_file(dir_ / "seeded" / "corpus.json").at("seed"), 9);
  EXPECT_EQ(io::read_json_file(dir_ / "seeded" / "manifest.json").at("seed"), 9);
}

TEST_F(Cli, ManifestRerunIsBitForBit) {
  const Json doc = {{"problem", p2_problem()}, {"grid", line(-3.0, 3.0, 31, 10)}};
  ASSERT_EQ(run("solve", doc, "first"), kOk) << err_.str();
  RunOptions o;
  o.config = dir_ / "first" / "manifest.json";
  o.out = dir_ / "second";
  ASSERT_EQ(run_command("solve", o, log_, err_), kOk) << err_.str();
  for (int k = 0; k <= 10; ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "slice_%04d.csv", k);
    EXPECT_EQ(slurp(dir_ / "first" / name), slurp(dir_ / "second" / name)) << name;
  }
  for (const char* f : {"validation.json", "structural.json"})
    EXPECT_EQ(slurp(dir_ / "first" / f), slurp(dir_ / "second" / f)) << f;
  const Json a = io::read_json_file(dir_ / "first" / "manifest.json");
  const Json b = io::read_json_file(dir_ / "second" / "manifest.json");
  EXPECT_EQ(a.at("config").at("problem"), b.at("config").at("problem"));
  EXPECT_EQ(a.at("config").at("grid"), b.at("config").at("grid"));
}

TEST_F(Cli, MissingConfigFile) {
  RunOptions o;
  o.config = dir_ / "absent.json";
  o.out = dir_ / "x";
  EXPECT_EQ(run_command("solve", o, log_, err_), kConfigError);
}

int shell(const std::string& args) {
  const int status = std::system((std::string(IMPULSE_CLI_BINARY) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST_F(Cli, BinaryExitCodes) {
  const auto config = dir_ / "p1.json";
  io::write_json_file(config, {{"problem", p1_problem()}, {"grid", line(-2.0, 2.0, 21, 4)}});
  const std::string out = " --out " + (dir_ / "out").string();
  EXPECT_EQ(shell("solve --config " + config.string() + out), 0);
  EXPECT_EQ(shell("solve --config " + config.string() + out + " --no-verify --seed 3"), 0);
  EXPECT_EQ(shell("solve" + out), 2);
  EXPECT_EQ(shell("frobnicate --config " + config.string()), 2);
  EXPECT_EQ(shell("solve --config " + (dir_ / "nope.json").string() + out), 2);
  EXPECT_EQ(shell("--version"), 0);
}

}  // namespace
}  // namespace impulse::cli
