#include <gtest/gtest.h>

#include "polyfly/validator.hpp"

using namespace polyfly;

namespace {

Environment open_env() {
  Environment env;
  env.name = "open";
  env.bounds_lo = Vec3(-1, -2, 0);
  env.bounds_hi = Vec3(4, 2, 3);
  env.start = Vec3(0, 0, 1);
  return env;
}

/// Rest-to-rest move along x with jerk pattern 0, +J, -J, -J, +J, 0.
Trajectory rest_to_rest(double J, double dt) {
  Trajectory t;
  t.states.push_back(FlatState{});
  t.states.front().x_L = Vec3(0, 0, 1);
  for (double s : {0.0, 1.0, -1.0, -1.0, 1.0, 0.0}) {
    t.inputs.push_back({Vec3(s * J, 0, 0)});
    t.durations.push_back(dt);
    t.states.push_back(rk4_step(t.states.back(), t.inputs.back(), dt));
  }
  return t;
}

}  // namespace

TEST(Validate, RestToRestMovePasses) {
  const Trajectory t = rest_to_rest(4.0, 0.2);
  Environment env = open_env();
  env.goal = t.states.back().x_L;
  env.obstacles.push_back(Obstacle::from_box({Vec3(0.2, 0.2, 0.2), Vec3(0.5, 1.0, 1.0), Vec3::Zero()}));
  const ValidationReport r = validate(t, env, SystemParams{}, Weights{});
  EXPECT_TRUE(r.pass) << r.failure;
  EXPECT_LE(r.dynamics_defect_max, 1e-12);
  EXPECT_LE(r.boundary_residual_max, 1e-12);
  EXPECT_LE(r.quad_endpoint_speed, 1e-9);
  EXPECT_LE(r.quad_endpoint_accel, 1e-9);
  EXPECT_NEAR(r.total_time, 1.2, 1e-12);
  EXPECT_NEAR(r.path_length, env.goal.x(), 1e-12);
  EXPECT_EQ(r.per_stage_min_distance.rows(), 7);
  EXPECT_GE(r.subsample_min_distance, env.beta);
}

TEST(Validate, ThinWallBetweenKnotsIsAnIntersampleViolation) {
  Trajectory t;
  FlatState s;
  s.x_L = Vec3(0, 0, 1);
  s.v_L = Vec3(4, 0, 0);
  for (int k = 0; k < 3; ++k) {
    t.states.push_back(s);
    s.x_L.x() += 1.0;
  }
  t.inputs.assign(2, FlatInput{});
  t.durations.assign(2, 0.25);
  Environment env = open_env();
  env.goal = t.states.back().x_L;
  env.obstacles.push_back(Obstacle::from_box({Vec3(0.02, 0.5, 2.0), Vec3(0.5, 0, 1.5), Vec3::Zero()}));
  const ValidationReport r = validate(t, env, SystemParams{}, Weights{});
  EXPECT_TRUE(r.knots_clear);
  EXPECT_TRUE(r.intersample_violation);
  EXPECT_FALSE(r.pass);
  EXPECT_EQ(r.failure, "clearance below beta between knots");
  EXPECT_FALSE(r.worst.at_knot);
  EXPECT_EQ(r.worst.stage, 0);
  EXPECT_LT(r.subsample_min_distance, 0.0);
}

TEST(Validate, KnotCollisionAndDefectsAreReported) {
  Trajectory t = rest_to_rest(4.0, 0.2);
  Environment env = open_env();
  env.goal = t.states.back().x_L;
  env.obstacles.push_back(Obstacle::from_box({Vec3(0.1, 0.1, 0.1), Vec3(0, 0, 1), Vec3::Zero()}));
  EXPECT_EQ(validate(t, env, SystemParams{}, Weights{}).failure, "clearance below beta at a knot");

  env.obstacles.clear();
  t.states[3].x_L.y() += 1e-3;
  const ValidationReport r = validate(t, env, SystemParams{}, Weights{});
  EXPECT_FALSE(r.pass);
  EXPECT_NEAR(r.dynamics_defect_max, 1e-3, 1e-12);

  Trajectory fast = rest_to_rest(8.0, 0.2);
  env.goal = fast.states.back().x_L;
  EXPECT_EQ(validate(fast, env, SystemParams{}, Weights{}).failure, "box bounds violated");
}

TEST(Validate, RejectsTooFewSamples) {
  ValidationOptions o;
  o.subsamples = 0;
  Environment env = open_env();
  const Trajectory t = rest_to_rest(4.0, 0.2);
  EXPECT_THROW(validate(t, env, SystemParams{}, Weights{}, o), Error);
}

TEST(Compare, IdenticalTrajectoriesHaveZeroDiff) {
  const Trajectory t = rest_to_rest(4.0, 0.2);
  Environment env = open_env();
  env.goal = t.states.back().x_L;
  env.obstacles.push_back(Obstacle::from_box({Vec3(0.2, 0.2, 0.2), Vec3(0.5, 1.0, 1.0), Vec3::Zero()}));
  const Comparison c = compare(t, t, env, SystemParams{}, Weights{});
  EXPECT_EQ(c.time_diff(), 0.0);
  EXPECT_EQ(c.length_diff(), 0.0);
  EXPECT_EQ(c.clearance_diff(), 0.0);
  EXPECT_TRUE(c.pass_a && c.pass_b);
}

TEST(ValidationJson, HasStableKeys) {
  const Trajectory t = rest_to_rest(4.0, 0.2);
  Environment env = open_env();
  env.goal = t.states.back().x_L;
  const auto j = validation_to_json(validate(t, env, SystemParams{}, Weights{}));
  for (const char* key : {"pass", "failure", "intersample_violation", "knot_min_distance", "subsample_min_distance",
                          "dynamics_defect_max", "boundary_residual_max", "bound_violation_max", "total_time",
                          "path_length", "worst", "per_stage_min_distance"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_TRUE(j.at("knot_min_distance").is_null());  // no obstacles
}
