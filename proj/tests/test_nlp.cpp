#include <random>

#include <gtest/gtest.h>

#include "derivative_check.hpp"
#include "oracles.hpp"
#include "polyfly/nlp.hpp"
#include "polyfly/scenarios.hpp"
#include "polyfly/validator.hpp"

using namespace polyfly;

namespace {

Environment empty_env() {
  Environment env;
  env.name = "empty";
  env.bounds_lo = Vec3(-1, -1, 0);
  env.bounds_hi = Vec3(2, 1, 2);
  env.start = Vec3(0, 0, 1);
  env.goal = Vec3(1, 0, 1);
  return env;
}

Trajectory hover_trajectory(int N, const Vec3& at, double dt) {
  Trajectory t;
  FlatState s;
  s.x_L = at;
  t.states.assign(N + 1, s);
  t.inputs.assign(N, FlatInput{});
  t.durations.assign(N, dt);
  return t;
}

}  // namespace

TEST(Cost, TimeTerm) {
  EXPECT_NEAR(cost_time(std::vector<double>(10, 0.1), 1000.0), 100.0, 1e-12);
  EXPECT_EQ(cost_time(std::vector<double>(10, 0.0), 1000.0), 0.0);
}

TEST(Cost, InputRateTerm) {
  EXPECT_EQ(cost_input_rate(std::vector<FlatInput>(4, FlatInput{Vec3(1, 2, 3)}), 5.0), 0.0);
  const std::vector<FlatInput> u{FlatInput{Vec3::Zero()}, FlatInput{Vec3(1, 0, 0)}};
  EXPECT_NEAR(cost_input_rate(u, 2.0), 1.0, 1e-15);
}

TEST(Cost, GuessProximityTerm) {
  const int N = 6;
  const Trajectory t = hover_trajectory(N, Vec3(0, 0, 1), 0.1);
  std::vector<Vec3> guess(N + 1, Vec3(0, 0, 1));
  EXPECT_EQ(cost_guess_proximity(t.states, guess, 3.0), 0.0);
  const Vec3 d(0.1, -0.2, 0.3);
  guess[2] += d;
  EXPECT_NEAR(cost_guess_proximity(t.states, guess, 3.0), 3.0 * d.squaredNorm() / (N - 1), 1e-15);
  guess[0] += d;  // endpoints do not count
  EXPECT_NEAR(cost_guess_proximity(t.states, guess, 3.0), 3.0 * d.squaredNorm() / (N - 1), 1e-15);
}

TEST(Cost, DurationSmoothnessTerm) {
  EXPECT_EQ(cost_dt_smoothness(std::vector<double>(5, 0.2), 1.0), 0.0);
  EXPECT_NEAR(cost_dt_smoothness({0.1, 0.2}, 2.0), 0.01, 1e-15);
}

TEST(Cost, TotalOnRestingGuess) {
  const int N = 10;
  Weights w;
  const Trajectory t = hover_trajectory(N, Vec3(0, 0, 1), 0.13);
  const std::vector<Vec3> guess(N + 1, Vec3(0, 0, 1));
  EXPECT_NEAR(cost_total(t, guess, w), w.alpha_to * 0.13, 1e-12);
}

TEST(Cost, ProblemGradientMatchesFiniteDifferences) {
  const Environment env = empty_env();
  Weights w;
  PlanOptions o;
  o.N = 8;
  const Trajectory seed = seed_all(env, SystemParams{}, w, o);
  std::vector<Vec3> anchor;
  for (const auto& s : seed.states) anchor.push_back(s.x_L + Vec3(0.01, -0.02, 0.03));
  TrajectoryProblem prob(env, SystemParams{}, w, o, anchor);
  std::mt19937_64 rng(2);
  const Eigen::VectorXd x = oracle::random_point(prob, seed, rng);
  NlpEvaluation ev;
  ASSERT_TRUE(prob.evaluate_derivatives(x, ev));
  Eigen::VectorXd c(prob.num_constraints());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = 1e-6;
    Eigen::VectorXd xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    double fp = 0, fm = 0;
    prob.evaluate_values(xp, fp, c);
    prob.evaluate_values(xm, fm, c);
    EXPECT_LE(oracle::rel_err(ev.gradient(i), (fp - fm) / (2 * h)), 1e-6) << "variable " << i;
  }
}

TEST(Dynamics, IntegratedRolloutHasNoDefect) {
  std::mt19937_64 rng(9);
  Trajectory t = hover_trajectory(12, Vec3(0, 0, 1), 0.1);
  for (int k = 0; k < 12; ++k) {
    t.inputs[k].j_L = oracle::uniform_vec(rng, -3, 3);
    t.durations[k] = oracle::uniform(rng, 0.05, 0.2);
    t.states[k + 1] = rk4_step(t.states[k], t.inputs[k], t.durations[k]);
  }
  for (const auto& d : dynamics_defects(t)) EXPECT_LE(d.cwiseAbs().maxCoeff(), 1e-12);
  const StateVec delta = (StateVec() << 0.1, 0, 0, 0, -0.2, 0, 0, 0, 0.3).finished();
  t.states[5] = FlatState::from_stacked(t.states[5].stacked() + delta);
  const auto d = dynamics_defects(t);
  EXPECT_LE((d[4] - delta).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Boundary, RestingEndpointsAndTerminalVelocity) {
  const Environment env = empty_env();
  Trajectory t = hover_trajectory(4, env.start, 0.1);
  t.states.back().x_L = env.goal;
  EXPECT_EQ(boundary_constraints(t, env).cwiseAbs().maxCoeff(), 0.0);
  const Vec3 v(0.3, -0.1, 0.2);
  t.states.back().v_L = v;
  EXPECT_EQ(boundary_constraints(t, env).segment<3>(9), v);
  const QuadState qs = flat_to_quad(t.states.front(), t.inputs.front(), SystemParams{});
  EXPECT_LE(qs.v_Q.norm(), 1e-9);
  EXPECT_LE(qs.a_Q.norm(), 1e-9);
}

TEST(Collision, DistantObstacleCertificateClearsBeta) {
  const SystemParams p;
  Environment env = empty_env();
  env.bounds_hi = Vec3(20, 20, 20);
  env.obstacles.push_back(Obstacle::from_box({Vec3(0.5, 0.5, 0.5), Vec3(11, 0, 1), Vec3::Zero()}));
  PlanOptions o;
  o.N = 4;
  Trajectory t = seed_all(env, p, Weights{}, o);
  EXPECT_EQ(warm_start_duals(t, env, p), 3 * 5);
  const auto res = collision_constraints(t, env, p);
  for (const auto& r : res.entries) {
    EXPECT_GE(r.margin, env.beta);
    EXPECT_LE(r.stationarity.cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE(r.norm_residual, 1e-9);
  }
  EXPECT_LE(res.max_violation(), 1e-9);
}

TEST(Problem, DerivativesAtRandomPoints) {
  const SystemParams p;
  const Environment env = gen_maze(2);
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 3; ++trial) {
    PlanOptions o;
    o.N = 4;
    o.model = trial == 2 ? CollisionModel::SinglePolytope : CollisionModel::ComponentWise;
    o.rotation_aware = trial != 1;
    const Trajectory seed = seed_all(env, p, Weights{}, o);
    std::vector<Vec3> anchor;
    for (const auto& s : seed.states) anchor.push_back(s.x_L);
    TrajectoryProblem prob(env, p, Weights{}, o, anchor);
    const Eigen::VectorXd x = oracle::random_point(prob, seed, rng);
    const auto err = oracle::check_derivatives(prob, x, oracle::random_multipliers(prob.num_constraints(), rng));
    ASSERT_TRUE(err.domain_ok);
    EXPECT_LE(err.gradient, 1e-5);
    EXPECT_LE(err.jacobian, 1e-5);
    EXPECT_LE(err.hessian, 1e-5);
  }
}

TEST(Problem, PackUnpackRoundTrip) {
  PlanOptions o;
  o.N = 5;
  const Environment env = make_corridor();
  const Trajectory seed = seed_all(env, SystemParams{}, Weights{}, o);
  std::vector<Vec3> anchor;
  for (const auto& s : seed.states) anchor.push_back(s.x_L);
  TrajectoryProblem prob(env, SystemParams{}, Weights{}, o, anchor);
  const Trajectory back = prob.unpack(prob.pack(seed));
  EXPECT_EQ(trajectory_to_json(back).at("states"), trajectory_to_json(seed).at("states"));
  EXPECT_EQ(trajectory_to_json(back).at("duals"), trajectory_to_json(seed).at("duals"));
}

TEST(Solve, EmptyEnvironmentTimeTrendAndReport) {
  const Environment env = empty_env();
  const SystemParams p;
  PlanOptions o;
  o.N = 20;
  double previous = std::numeric_limits<double>::infinity();
  for (double alpha_to : {1e2, 1e3, 1e4}) {
    Weights w;
    w.alpha_to = alpha_to;
    const PlanResult r = plan(env, p, w, o);
    ASSERT_EQ(r.report.status, SolveStatus::Solved) << alpha_to;
    EXPECT_LE(r.report.constraint_violation, 1e-5);
    EXPECT_LE(r.report.kkt_residual, 1e-4);
    EXPECT_LE(r.violations.dynamics, 1e-6);
    EXPECT_LE(r.violations.boundary, 1e-6);
    const double T = r.trajectory.total_time();
    EXPECT_GE(T, o.N * w.dt_min - 1e-9);
    EXPECT_LE(T, o.N * w.dt_max + 1e-9);
    EXPECT_LT(T, previous) << alpha_to;
    previous = T;
    EXPECT_TRUE(validate(r.trajectory, env, p, w).pass);
  }
}
