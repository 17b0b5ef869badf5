#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "polyfly/bench.hpp"
#include "polyfly/config.hpp"
#include "polyfly/initializer.hpp"
#include "polyfly/scenarios.hpp"

using namespace polyfly;
namespace fs = std::filesystem;

namespace {

const fs::path& work_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "polyfly_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string path_in(const std::string& name) { return (work_dir() / name).string(); }

int run(const std::string& args) {
  const std::string cmd = std::string(POLYFLY_CLI_PATH) + " " + args + " > " + path_in("last.log") + " 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string small_config() {
  RunConfig c;
  c.plan.N = 20;
  const std::string path = path_in("small.json");
  write_text_file(path, dump_canonical(run_config_to_json(c)));
  return path;
}

}  // namespace

TEST(Cli, UsageErrorsExitWithThree) {
  EXPECT_EQ(run(""), 3);
  EXPECT_EQ(run("fly"), 3);
  EXPECT_EQ(run("plan --env " + path_in("nope.json") + " --out " + path_in("x")), 3);
  EXPECT_EQ(run("gen-env --kind spiral --out " + path_in("s.json")), 3);
  EXPECT_EQ(run("--help"), 0);
}

TEST(Cli, BenchRejectsEmptySuiteAndBadAxis) {
  fs::create_directories(path_in("empty_suite"));
  EXPECT_EQ(run("bench --suite " + path_in("empty_suite") + " --axis alpha_g"), 3);
  EXPECT_EQ(run("bench --suite " + path_in("missing_suite") + " --axis alpha_g"), 3);
  fs::create_directories(path_in("one_suite"));
  save_environment(make_corridor(), path_in("one_suite/corridor.json"));
  EXPECT_EQ(run("bench --suite " + path_in("one_suite") + " --axis warp"), 3);
}

TEST(Cli, GenerateEnvironments) {
  ASSERT_EQ(run("gen-env --kind maze --seed 4 --out " + path_in("maze4.json")), 0);
  EXPECT_EQ(load_environment(path_in("maze4.json")).name, gen_maze(4).name);
  ASSERT_EQ(run("gen-env --kind gap --gap 0.14 --out " + path_in("gap.json")), 0);
  const Environment gap = load_environment(path_in("gap.json"));
  EXPECT_EQ(environment_to_json(gap), environment_to_json(gen_narrow_gap(0.14)));
  ASSERT_EQ(run("gen-suite --out " + path_in("suite")), 0);
  EXPECT_EQ(load_suite(path_in("suite")).size(), 8u);
}

TEST(Cli, ValidateAndRenderSeedTrajectory) {
  const Environment env = make_corridor();
  save_environment(env, path_in("corridor.json"));
  PlanOptions o;
  o.N = 12;
  write_text_file(path_in("seed.json"), dump_canonical(trajectory_to_json(seed_all(env, SystemParams{}, Weights{}, o))));
  EXPECT_EQ(run("validate --traj " + path_in("seed.json") + " --env " + path_in("corridor.json")), 2);
  const std::string render = "render --traj " + path_in("seed.json") + " --env " + path_in("corridor.json") +
                             " --every 3 --out ";
  ASSERT_EQ(run(render + path_in("a.svg")), 0);
  ASSERT_EQ(run(render + path_in("b.svg")), 0);
  const std::string a = slurp(path_in("a.svg"));
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(path_in("b.svg")));
  EXPECT_EQ(run("validate --traj " + path_in("seed.json") + " --env " + path_in("nope.json")), 3);
}

TEST(Cli, PlanCorridorWritesArtifacts) {
  save_environment(make_corridor(), path_in("corridor.json"));
  const std::string out = path_in("plan_corridor");
  ASSERT_EQ(run("plan --env " + path_in("corridor.json") + " --config " + small_config() + " --mode component --out " +
                out),
            0)
      << slurp(path_in("last.log"));
  for (const char* f : {"trajectory.json", "report.json", "render.svg"}) EXPECT_TRUE(fs::exists(fs::path(out) / f)) << f;
  const json traj = read_json_file(out + "/trajectory.json");
  const json report = read_json_file(out + "/report.json");
  EXPECT_EQ(traj.at("report"), report);
  EXPECT_EQ(report.at("status"), "Solved");
  EXPECT_TRUE(report.at("pass").get<bool>());
  EXPECT_EQ(trajectory_from_json(traj).N(), 20);
  EXPECT_EQ(run("validate --traj " + out + "/trajectory.json --env " + path_in("corridor.json")), 0);
}

TEST(Cli, SinglePolytopeFailsNarrowGap) {
  write_text_file(path_in("gap14.json"), dump_canonical(environment_to_json(gen_narrow_gap(0.14))));
  const std::string out = path_in("plan_gap_single");
  EXPECT_EQ(run("plan --env " + path_in("gap14.json") + " --mode single --out " + out), 2);
  const json report = read_json_file(out + "/report.json");
  EXPECT_EQ(report.at("status"), "Infeasible");
  EXPECT_FALSE(report.at("pass").get<bool>());
}
