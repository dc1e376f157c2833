#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <sys/wait.h>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "shearlab/pipeline.hpp"

using namespace shearlab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("shearlab_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

RunConfig small_config(const fs::path& out) {
  RunConfig c = parse_config(R"j({
    "mesh": {"nx": 8, "ny": 8},
    "data": {"g2": ["0.1*sin(pi*x)*cos(pi*y)", "-0.1*cos(pi*x)*sin(pi*y)"]},
    "constants": {"samples": 20000, "ascent_iters": 20, "ascent_starts": 1, "probe_trials": 4},
    "sweep": {"lambdas": [0.5, 1, 4, 16]},
    "counterexample": {"n_values": [1, 4, 16, 64, 256]}
  })j");
  c.output = out.string();
  return c;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SHEARLAB_CLI) + " " + args + " > /dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

}  // namespace

TEST(Pipeline, CommandNames) {
  const auto& n = command_names();
  for (const char* c : {"check-tensor", "lift", "certify", "solve", "counterexample", "verify-lemmas"})
    EXPECT_NE(std::find(n.begin(), n.end(), c), n.end()) << c;
  EXPECT_EQ(run_command("nope", RunConfig{}).exit_code, kExitInvalidConfig);
}

// Same seed, same bytes.
TEST(Pipeline, DeterministicOutputs) {
  for (const std::string cmd : {"certify", "counterexample", "lift"}) {
    const fs::path a = scratch(cmd + "_a"), b = scratch(cmd + "_b");
    const CommandResult ra = run_command(cmd, small_config(a));
    const CommandResult rb = run_command(cmd, small_config(b));
    ASSERT_EQ(ra.exit_code, rb.exit_code) << cmd;
    ASSERT_FALSE(ra.files.empty()) << cmd;
    ASSERT_EQ(ra.files.size(), rb.files.size());
    for (std::size_t i = 0; i < ra.files.size(); ++i) {
      const fs::path fa = ra.files[i], fb = rb.files[i];
      EXPECT_EQ(fa.filename(), fb.filename());
      EXPECT_EQ(slurp(fa), slurp(fb)) << fa;
    }
  }
}

TEST(Pipeline, CertifySmallInstance) {
  const fs::path d = scratch("certify");
  const CommandResult r = run_command("certify", small_config(d));
  EXPECT_EQ(r.exit_code, kExitOk) << r.message;
  EXPECT_TRUE(fs::exists(d / "certify.json"));
  EXPECT_TRUE(fs::exists(d / "sweep.csv"));
}

TEST(Cli, ExitCodes) {
  const fs::path d = scratch("cli");
  const std::string cfgs = SHEARLAB_CONFIGS;
  EXPECT_EQ(run_cli("certify --config " + cfgs + "/uncertified.json --out " + (d / "u").string()), 2);
  EXPECT_EQ(run_cli("solve --config " + cfgs + "/uncertified.json --out " + (d / "s").string()), 2);
  EXPECT_EQ(run_cli("lift --config " + cfgs + "/incompatible.json --out " + (d / "i").string()), 4);
  const fs::path bad = d / "bad.json";
  std::ofstream(bad) << R"j({"model": {"p": 3}})j";
  EXPECT_EQ(run_cli("certify --config " + bad.string()), 4);
  const fs::path lv = d / "levels.json";
  std::ofstream(lv) << R"j({"counterexample": {"levels": 1}})j";
  EXPECT_EQ(run_cli("counterexample --config " + lv.string() + " --out " + (d / "c").string()), 4);
  EXPECT_EQ(run_cli("frobnicate"), 4);
  EXPECT_EQ(run_cli("counterexample --out " + (d / "ok").string() + " --seed 3"), 0);
  EXPECT_TRUE(fs::exists(d / "ok" / "counterexample.csv"));
}
