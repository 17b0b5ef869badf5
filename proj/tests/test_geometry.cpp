#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "polyfly/geometry.hpp"

using namespace polyfly;

namespace {

HPolytope unit_cube(const Vec3& center = Vec3::Zero()) { return make_box(Vec3::Ones(), Pose::translation(center)); }

}  // namespace

TEST(Box, AxisAlignedUnitCubeHasSignedAxisRows) {
  const HPolytope P = make_box(Vec3::Ones());
  ASSERT_EQ(P.num_faces(), 6);
  for (int axis = 0; axis < 3; ++axis) {
    EXPECT_EQ(P.A().row(2 * axis).transpose(), Vec3::Unit(axis));
    EXPECT_EQ(P.A().row(2 * axis + 1).transpose(), -Vec3::Unit(axis));
  }
  EXPECT_TRUE((P.b().array() == 1.0).all());
}

TEST(Box, RejectsNonPositiveExtent) {
  try {
    make_box(Vec3(1.0, 0.0, 1.0));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonPositiveExtent);
  }
}

TEST(Box, RotatedBoxContainsItsCorners) {
  const Pose pose = Pose::from_rpy(Vec3(0.3, -0.2, 1.1), Vec3(1, 2, 3));
  const HPolytope P = make_box(Vec3(0.5, 0.2, 0.1), pose);
  for (int sx : {-1, 1}) {
    for (int sy : {-1, 1}) {
      for (int sz : {-1, 1}) {
        const Vec3 corner = pose.apply(Vec3(0.5 * sx, 0.2 * sy, 0.1 * sz));
        EXPECT_NEAR(P.max_violation(corner), 0.0, 1e-12);
      }
    }
  }
  EXPECT_FALSE(P.contains(pose.apply(Vec3(0.6, 0, 0))));
}

TEST(HPolytopeCtor, DetectsDegenerateInputs) {
  Eigen::Matrix<double, Eigen::Dynamic, 3> A(3, 3);
  A.setIdentity();
  EXPECT_THROW(HPolytope(A, Eigen::Vector3d::Ones()), Error);  // too few faces

  Eigen::Matrix<double, Eigen::Dynamic, 3> open(4, 3);
  open << 1, 0, 0, 0, 1, 0, 0, 0, 1, 1, 1, 1;
  EXPECT_THROW(HPolytope(open, Eigen::Vector4d::Ones()), Error);  // unbounded

  Eigen::Matrix<double, Eigen::Dynamic, 3> B(6, 3);
  B << 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1;
  Eigen::VectorXd b(6);
  b << 1, -2, 1, 1, 1, 1;  // x <= 1 and x >= 2
  EXPECT_THROW(HPolytope(B, b), Error);

  Eigen::VectorXd short_b(5);
  short_b.setOnes();
  try {
    HPolytope(B, short_b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(HPolytopeCtor, NormalizesRows) {
  Eigen::Matrix<double, Eigen::Dynamic, 3> A(6, 3);
  A << 2, 0, 0, -2, 0, 0, 0, 3, 0, 0, -3, 0, 0, 0, 4, 0, 0, -4;
  Eigen::VectorXd b(6);
  b << 2, 2, 3, 3, 4, 4;
  const HPolytope P(A, b);
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(P.A().row(i).norm(), 1.0, 1e-15);
  EXPECT_TRUE((P.b().array() == 1.0).all());
}

TEST(Transform, IdentityFrameIsBitExact) {
  std::mt19937_64 rng(3);
  const HPolytope M = oracle::random_polytope(rng, 9, Vec3(1, -1, 2));
  const HPolytope T = transform_into_frame(M, Pose{});
  EXPECT_EQ(T.A(), M.A());
  EXPECT_EQ(T.b(), M.b());
}

TEST(Transform, MembershipIsPreserved) {
  std::mt19937_64 rng(4);
  const HPolytope M = oracle::random_polytope(rng, 8, Vec3(0.5, 0.2, -0.3));
  const Pose frame = Pose::from_rpy(Vec3(0.4, 0.1, -0.7), Vec3(0.3, -0.4, 0.2));
  const HPolytope T = transform_into_frame(M, frame);
  for (int s = 0; s < 200; ++s) {
    const Vec3 y = oracle::uniform_vec(rng, -2.0, 2.0);
    EXPECT_NEAR(T.max_violation(y), M.max_violation(frame.apply(y)), 1e-12);
  }
}

TEST(Duals, ZeroDualsGiveZeroMarginAndResiduals) {
  const HPolytope M = unit_cube(), N = unit_cube(Vec3(3, 0, 0));
  const DualPair z{Eigen::VectorXd::Zero(6), Eigen::VectorXd::Zero(6)};
  EXPECT_EQ(dual_margin(M, N, z), 0.0);
  EXPECT_EQ(dual_residuals(M, N, z).max(), 0.0);
}

TEST(Duals, InfeasibleAndMismatchedDualsAreRejected) {
  const HPolytope M = unit_cube(), N = unit_cube(Vec3(3, 0, 0));
  DualPair d{Eigen::VectorXd::Zero(6), Eigen::VectorXd::Zero(6)};
  d.lambda_M(0) = 1.0;  // stationarity broken
  try {
    dual_margin(M, N, d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InfeasibleDuals);
  }
  d.lambda_N = Eigen::VectorXd::Zero(5);
  try {
    dual_residuals(M, N, d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(Duals, NormAndSignResiduals) {
  const HPolytope M = unit_cube(), N = unit_cube(Vec3(3, 0, 0));
  DualPair d{Eigen::VectorXd::Zero(6), Eigen::VectorXd::Zero(6)};
  d.lambda_M(0) = 2.0;  // +x face of M
  d.lambda_N(1) = 2.0;  // -x face of N
  const auto r = dual_residuals(M, N, d);
  EXPECT_NEAR(r.stationarity.norm(), 0.0, 1e-15);
  EXPECT_NEAR(r.norm_excess, 1.0, 1e-15);
  d.lambda_M(2) = -0.5;
  EXPECT_NEAR(dual_residuals(M, N, d).neg_violation, 0.5, 1e-15);
}

TEST(Oracle, IdenticalCubesOverlap) {
  EXPECT_LE(signed_distance_oracle(unit_cube(), unit_cube()), 0.0);
  EXPECT_NEAR(signed_distance_oracle(unit_cube(), unit_cube()), -1.0, 1e-9);
}

TEST(Oracle, MatchesBruteForceHullDistance) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 40; ++t) {
    const HPolytope M = oracle::random_polytope(rng, 4 + t % 9, Vec3::Zero());
    const HPolytope N = oracle::random_polytope(rng, 4 + (t * 5) % 9, 3.0 * oracle::unit_vec(rng));
    const double ref = oracle::separation_distance(M, N);
    if (ref == 0.0) {
      EXPECT_LE(signed_distance_oracle(M, N), 1e-9);
    } else {
      EXPECT_NEAR(signed_distance_oracle(M, N), ref, 1e-7);
    }
  }
}

TEST(MaxDualBound, CubesOneMeterApart) {
  const auto [bound, duals] = max_dual_bound(unit_cube(), unit_cube(Vec3(3, 0, 0)));
  EXPECT_NEAR(bound, 1.0, 1e-4);
  EXPECT_LE(dual_residuals(unit_cube(), unit_cube(Vec3(3, 0, 0)), duals).max(), 1e-9);
}

TEST(MaxDualBound, DiagonalOffsetMatchesCornerDistance) {
  const HPolytope N = unit_cube(Vec3(3, 3, 3));
  const double expected = std::sqrt(3.0);  // corner (1,1,1) to corner (2,2,2)
  EXPECT_NEAR(max_dual_bound(unit_cube(), N).first, expected, 1e-6);
}

TEST(MaxDualBound, OverlapIsReported) {
  try {
    max_dual_bound(unit_cube(), unit_cube(Vec3(0.5, 0, 0)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotSeparated);
  }
}

TEST(Vertices, UnitCubeHasEightCorners) {
  const auto v = vertex_enumeration(unit_cube());
  ASSERT_EQ(v.size(), 8u);
  for (const Vec3& c : v) EXPECT_NEAR(c.cwiseAbs().minCoeff(), 1.0, 1e-12);
}

TEST(Vertices, AgreeWithBruteForce) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    const HPolytope P = oracle::random_polytope(rng, 4 + t % 9, Vec3::Zero());
    const auto lib = vertex_enumeration(P);
    const auto ref = oracle::vertices(P.A(), P.b());
    ASSERT_EQ(lib.size(), ref.size());
    for (const Vec3& v : ref) {
      double best = 1e9;
      for (const Vec3& w : lib) best = std::min(best, (v - w).norm());
      EXPECT_LT(best, 1e-9);
    }
  }
}
