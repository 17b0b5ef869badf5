#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "polyfly/config.hpp"
#include "polyfly/initializer.hpp"
#include "polyfly/scenarios.hpp"

using namespace polyfly;

namespace {

std::string temp_file(const std::string& name, const std::string& text) {
  const auto dir = std::filesystem::temp_directory_path() / "polyfly_io_tests";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / name).string();
  std::ofstream(path) << text;
  return path;
}

}  // namespace

TEST(Config, EmptyObjectKeepsDefaults) {
  const RunConfig c = run_config_from_json(json::object());
  const RunConfig d;
  EXPECT_EQ(run_config_to_json(c), run_config_to_json(d));
}

TEST(Config, RoundTrip) {
  RunConfig c;
  c.params.m_L = 0.35;
  c.weights.alpha_g = 1.0;
  c.weights.u_hi = Vec3(4, 5, 6);
  c.solver.max_iterations = 123;
  c.plan.N = 33;
  c.plan.model = CollisionModel::SinglePolytope;
  c.plan.velocity_init = false;
  c.validation.subsamples = 7;
  const json j = run_config_to_json(c);
  EXPECT_EQ(run_config_to_json(run_config_from_json(j)), j);
}

TEST(Config, PartialSectionsAndFile) {
  const std::string path = temp_file("cfg.json", R"({"weights": {"alpha_g": 0.0}, "plan": {"N": 12}})");
  const RunConfig c = load_run_config(path);
  EXPECT_EQ(c.weights.alpha_g, 0.0);
  EXPECT_EQ(c.weights.alpha_to, Weights{}.alpha_to);
  EXPECT_EQ(c.plan.N, 12);
  EXPECT_TRUE(c.plan.rotation_aware);
}

TEST(Config, Errors) {
  try {
    run_config_from_json(json::parse(R"({"plan": {"N": "many"}})"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
  }
  EXPECT_THROW(run_config_from_json(json::parse(R"({"plan": {"N": 1}})")), Error);
  EXPECT_THROW(run_config_from_json(json::parse(R"({"plan": {"model": "spheres"}})")), Error);
  EXPECT_THROW(run_config_from_json(json::array()), Error);
  try {
    load_run_config("/nonexistent/polyfly.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoError);
  }
}

TEST(TrajectoryJson, RoundTripIsExact) {
  PlanOptions o;
  o.N = 7;
  Trajectory t = seed_all(make_corridor(), SystemParams{}, Weights{}, o);
  t.durations[3] = 0.1234567890123456789;
  const json j = trajectory_to_json(t);
  const Trajectory back = trajectory_from_json(json::parse(j.dump()));
  EXPECT_EQ(trajectory_to_json(back), j);
  EXPECT_EQ(back.durations[3], t.durations[3]);
}

TEST(TrajectoryJson, ExtraReportFieldIsIgnored) {
  PlanOptions o;
  o.N = 3;
  json j = trajectory_to_json(seed_all(make_corridor(), SystemParams{}, Weights{}, o));
  j["report"] = {{"status", "Solved"}};
  EXPECT_NO_THROW(trajectory_from_json(j));
}

TEST(TrajectoryJson, DimensionErrors) {
  PlanOptions o;
  o.N = 3;
  json j = trajectory_to_json(seed_all(make_corridor(), SystemParams{}, Weights{}, o));
  j["durations"].push_back(0.1);
  EXPECT_THROW(trajectory_from_json(j), Error);
  json k = trajectory_to_json(seed_all(make_corridor(), SystemParams{}, Weights{}, o));
  k.erase("states");
  try {
    trajectory_from_json(k);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
  }
}
