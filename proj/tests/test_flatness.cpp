#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "polyfly/flatness.hpp"

using namespace polyfly;

namespace {

const Vec3 e3 = Vec3::UnitZ();

using oracle::eom_residuals;
using oracle::Sinusoid;

}  // namespace

TEST(Rk4, EquilibriumStaysPut) {
  const FlatState y = rk4_step(FlatState{}, FlatInput{}, 0.37);
  EXPECT_EQ(y.stacked(), FlatState{}.stacked());
}

TEST(Rk4, UnitJerkClosedForm) {
  FlatInput u;
  u.j_L = Vec3(6, 0, 0);
  const FlatState y = rk4_step(FlatState{}, u, 1.0);
  EXPECT_NEAR((y.x_L - Vec3(1, 0, 0)).norm(), 0.0, 1e-15);
  EXPECT_NEAR((y.v_L - Vec3(3, 0, 0)).norm(), 0.0, 1e-15);
  EXPECT_NEAR((y.a_L - Vec3(6, 0, 0)).norm(), 0.0, 1e-15);
}

TEST(Rk4, RandomStepMatchesPolynomial) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 200; ++t) {
    FlatState x;
    x.x_L = oracle::uniform_vec(rng, -5, 5);
    x.v_L = oracle::uniform_vec(rng, -3, 3);
    x.a_L = oracle::uniform_vec(rng, -3, 3);
    FlatInput u{oracle::uniform_vec(rng, -10, 10)};
    const auto ref = oracle::jerk_polynomial(x.stacked(), u.j_L, 0.05);
    const auto got = rk4_step(x, u, 0.05).stacked();
    EXPECT_LE((got - ref).norm(), 1e-12 * std::max(1.0, ref.norm()));
  }
}

TEST(Rk4, NonPositiveStepIsRejected) {
  try {
    rk4_step(FlatState{}, FlatInput{}, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonPositiveDt);
  }
}

TEST(CableDirection, HoverAndFortyFiveDegrees) {
  const SystemParams p;
  EXPECT_EQ(cable_direction(Vec3::Zero(), p), -e3);
  const Vec3 q = cable_direction(Vec3(p.g, 0, 0), p);
  EXPECT_NEAR((q + Vec3(1, 0, 1) / std::sqrt(2.0)).norm(), 0.0, 1e-15);
}

TEST(CableDirection, FreefallBoundary) {
  const SystemParams p;
  EXPECT_NEAR((cable_direction(Vec3(0, 0, -p.g + 1e-2), p) + e3).norm(), 0.0, 1e-15);
  try {
    cable_direction(Vec3(0, 0, -p.g), p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FreefallSingularity);
  }
}

TEST(Attitude, UprightThrustIsIdentity) {
  EXPECT_NEAR((attitude_from_thrust(Vec3(0, 0, 9.81)) - Mat3::Identity()).norm(), 0.0, 1e-15);
}

TEST(Attitude, ScaleInvariantAndOrthonormal) {
  const Vec3 F = Vec3(1, 0, 1) / std::sqrt(2.0);
  const Mat3 R1 = attitude_from_thrust(F), R10 = attitude_from_thrust(10.0 * F);
  EXPECT_NEAR((R1 - R10).norm(), 0.0, 1e-15);
  EXPECT_NEAR((R1.transpose() * R1 - Mat3::Identity()).norm(), 0.0, 1e-14);
  EXPECT_NEAR(R1.determinant(), 1.0, 1e-14);
  EXPECT_NEAR((R1.col(2) - F).norm(), 0.0, 1e-15);
  EXPECT_NEAR(R1.col(1).x(), 0.0, 1e-15);  // b2 is orthogonal to the x axis when yaw is zero
}

TEST(Attitude, GimbalCaseIsDegenerate) {
  try {
    attitude_from_thrust(Vec3(1, 0, 1e-9));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateAttitude);
  }
}

TEST(FlatToQuad, Hover) {
  const SystemParams p;
  FlatState x;
  x.x_L = Vec3(0.3, -0.2, 1.0);
  const QuadState qs = flat_to_quad(x, FlatInput{}, p);
  EXPECT_LE((qs.q_cable + e3).norm(), 1e-9);
  EXPECT_LE((qs.x_Q - (x.x_L + p.l * e3)).norm(), 1e-9);
  EXPECT_LE(qs.v_Q.norm(), 1e-9);
  EXPECT_LE(qs.a_Q.norm(), 1e-9);
  EXPECT_LE((qs.R_Q - Mat3::Identity()).norm(), 1e-9);
  EXPECT_NEAR(qs.thrust.norm(), (p.m_Q + p.m_L) * 9.81, 1e-9);
}

TEST(FlatToQuad, HorizontalAccelerationEqualToGravity) {
  SystemParams p;
  p.m_Q = 1.0;
  p.m_L = 0.2;
  p.l = 1.0;
  FlatState x;
  x.a_L = Vec3(p.g, 0, 0);
  const QuadState qs = flat_to_quad(x, FlatInput{}, p);
  EXPECT_NEAR((qs.q_cable + Vec3(1, 0, 1) / std::sqrt(2.0)).norm(), 0.0, 1e-15);
  EXPECT_NEAR(qs.qdot_cable.norm(), 0.0, 1e-15);
  EXPECT_NEAR((qs.thrust - 1.2 * Vec3(p.g, 0, p.g)).norm(), 0.0, 1e-12);
  EXPECT_NEAR((qs.R_Q.col(2) - Vec3(1, 0, 1) / std::sqrt(2.0)).norm(), 0.0, 1e-15);
}

TEST(FlatToQuad, SineTrajectoryResidualsAndInvariants) {
  const SystemParams p;
  const Sinusoid traj{Vec3(1, 0, 0), Vec3(1, 1, 1), Vec3::Zero(), Vec3::Zero()};
  for (int i = 0; i < 100; ++i) {
    const double t = 0.1 * i;
    const FlatState x = traj.state(t);
    const QuadState qs = flat_to_quad(x, traj.input(t), p);
    const auto [r2, r3] = eom_residuals(x, qs, p);
    EXPECT_LE(r2, 1e-8);
    EXPECT_LE(r3, 1e-8);
    EXPECT_NEAR((qs.x_Q - x.x_L).norm(), p.l, 1e-9);
    EXPECT_NEAR(qs.q_cable.norm(), 1.0, 1e-9);
    EXPECT_NEAR(qs.q_cable.dot(qs.qdot_cable), 0.0, 1e-9);
    EXPECT_NEAR(qs.q_cable.dot(qs.qddot_cable), -qs.qdot_cable.squaredNorm(), 1e-8);
    EXPECT_NEAR((qs.R_Q.transpose() * qs.R_Q - Mat3::Identity()).norm(), 0.0, 1e-12);
  }
}

// The cable rate is the exact time derivative of the cable direction, so the
// quadrotor velocity converges at second order under central differences.
TEST(FlatToQuad, QuadVelocityCentralDifferenceOrder) {
  const SystemParams p;
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    const Sinusoid traj{oracle::uniform_vec(rng, 0.2, 0.6), oracle::uniform_vec(rng, 0.8, 1.6),
                        oracle::uniform_vec(rng, 0.0, 6.0), Vec3(0, 0, 1)};
    const double t = oracle::uniform(rng, 0.0, 5.0);
    const Vec3 v = flat_to_quad(traj.state(t), traj.input(t), p).v_Q;
    auto fd = [&](double h) {
      const Vec3 xp = flat_to_quad(traj.state(t + h), traj.input(t + h), p).x_Q;
      const Vec3 xm = flat_to_quad(traj.state(t - h), traj.input(t - h), p).x_Q;
      return ((xp - xm) / (2 * h) - v).norm();
    };
    const double e1 = fd(1e-2), e2 = fd(5e-3);
    ASSERT_GT(e1, 0.0);
    EXPECT_GE(std::log2(e1 / e2), 1.9);
  }
}

// Without swing the cable is fixed and the quadrotor acceleration equals the
// payload acceleration; central differences of v_Q confirm it at second order.
TEST(FlatToQuad, QuadAccelerationCentralDifferenceVerticalMotion) {
  const SystemParams p;
  const Sinusoid traj{Vec3(0, 0, 0.4), Vec3(1, 1, 1.3), Vec3(0, 0, 0.2), Vec3(0, 0, 1)};
  const double t = 0.9;
  const Vec3 a = flat_to_quad(traj.state(t), traj.input(t), p).a_Q;
  auto fd = [&](double h) {
    const Vec3 vp = flat_to_quad(traj.state(t + h), traj.input(t + h), p).v_Q;
    const Vec3 vm = flat_to_quad(traj.state(t - h), traj.input(t - h), p).v_Q;
    return ((vp - vm) / (2 * h) - a).norm();
  };
  const double e1 = fd(1e-2), e2 = fd(5e-3);
  EXPECT_LE(e1, 1e-3);
  EXPECT_GE(std::log2(e1 / e2), 1.9);
}

TEST(SystemParamsValidate, RejectsNonPositive) {
  SystemParams p;
  p.l = 0.0;
  EXPECT_THROW(p.validate(), Error);
}
