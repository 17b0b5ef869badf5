#pragma once

// H-representation polytopes, rigid frames, and the dual distance machinery:
// dual margins and residuals, the maximal dual lower bound, and an independent
// signed-distance oracle used for certification.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "polyfly/detail/gjk.hpp"
#include "polyfly/detail/lp.hpp"
#include "polyfly/errors.hpp"

namespace polyfly {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using FaceMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3>;

inline Mat3 rotation_from_rpy(const Vec3& rpy) {
  return (Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) * Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
          Eigen::AngleAxisd(rpy.x(), Vec3::UnitX()))
      .toRotationMatrix();
}

/// Rigid frame: points map as y_world = R y_body + O.
struct Pose {
  Mat3 R = Mat3::Identity();
  Vec3 O = Vec3::Zero();

  Pose() = default;
  Pose(const Mat3& rotation, const Vec3& origin) : R(rotation), O(origin) {
    if ((R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9 ||
        std::abs(R.determinant() - 1.0) > 1e-9) {
      throw Error(ErrorCode::InvalidArgument, "pose rotation is not orthonormal with det 1");
    }
  }

  static Pose translation(const Vec3& origin) { return Pose(Mat3::Identity(), origin); }
  static Pose from_rpy(const Vec3& rpy, const Vec3& origin) { return Pose(rotation_from_rpy(rpy), origin); }

  Vec3 apply(const Vec3& body) const { return R * body + O; }
  Vec3 inverse_apply(const Vec3& world) const { return R.transpose() * (world - O); }
};

/// Convex polytope {y : A y <= b} with unit-norm face rows.
class HPolytope {
 public:
  /// Normalizes rows and verifies the set is nonempty and bounded.
  HPolytope(FaceMatrix A, Eigen::VectorXd b) : A_(std::move(A)), b_(std::move(b)) {
    if (A_.rows() != b_.size()) {
      throw Error(ErrorCode::DimensionMismatch, "A has " + std::to_string(A_.rows()) + " rows but b has " +
                                                    std::to_string(b_.size()) + " entries");
    }
    if (A_.rows() < 4) throw Error(ErrorCode::DegeneratePolytope, "a bounded 3D polytope needs at least 4 faces");
    normalize_rows();
    check_bounded_nonempty();
  }

  /// Skips the LP checks; for polytopes derived from already-valid ones.
  static HPolytope trusted(FaceMatrix A, Eigen::VectorXd b) { return HPolytope(std::move(A), std::move(b), 0); }

  const FaceMatrix& A() const { return A_; }
  const Eigen::VectorXd& b() const { return b_; }
  int num_faces() const { return static_cast<int>(A_.rows()); }

  bool contains(const Vec3& y, double tol = 1e-9) const { return ((A_ * y - b_).array() <= tol).all(); }

  /// Largest violation max_i (a_i . y - b_i); negative inside.
  double max_violation(const Vec3& y) const { return (A_ * y - b_).maxCoeff(); }

 private:
  HPolytope(FaceMatrix A, Eigen::VectorXd b, int) : A_(std::move(A)), b_(std::move(b)) {}

  void normalize_rows() {
    for (Eigen::Index i = 0; i < A_.rows(); ++i) {
      const double n = A_.row(i).norm();
      if (!(n > 1e-12) || !std::isfinite(n)) {
        throw Error(ErrorCode::DegeneratePolytope, "face " + std::to_string(i) + " has a zero normal");
      }
      if (std::abs(n - 1.0) > 1e-14) {
        A_.row(i) /= n;
        b_(i) /= n;
      }
    }
  }

  void check_bounded_nonempty() const {
    const Eigen::MatrixXd G = A_;
    for (int axis = 0; axis < 3; ++axis) {
      for (double sign : {1.0, -1.0}) {
        Eigen::VectorXd c = Eigen::VectorXd::Zero(3);
        c(axis) = sign;
        const auto r = detail::solve_lp_free(G, b_, c);
        if (r.status == detail::LpStatus::Infeasible) throw Error(ErrorCode::DegeneratePolytope, "polytope is empty");
        if (r.status == detail::LpStatus::Unbounded) throw Error(ErrorCode::DegeneratePolytope, "polytope is unbounded");
      }
    }
  }

  FaceMatrix A_;
  Eigen::VectorXd b_;
};

/// Multipliers of the separation dual: lambda_M for the obstacle faces,
/// lambda_N for the robot component faces.
struct DualPair {
  Eigen::VectorXd lambda_M;
  Eigen::VectorXd lambda_N;
};

struct DualResiduals {
  Vec3 stationarity = Vec3::Zero();
  double norm_excess = 0.0;
  double neg_violation = 0.0;

  double max() const { return std::max({stationarity.cwiseAbs().maxCoeff(), norm_excess, neg_violation}); }
};

inline HPolytope make_box(const Vec3& half_extents, const Pose& pose = Pose{}) {
  if (!(half_extents.array() > 0.0).all()) {
    throw Error(ErrorCode::NonPositiveExtent, "box half-extents must be positive");
  }
  FaceMatrix A(6, 3);
  Eigen::VectorXd b(6);
  for (int axis = 0; axis < 3; ++axis) {
    const Vec3 n = pose.R.col(axis);
    A.row(2 * axis) = n.transpose();
    b(2 * axis) = half_extents(axis) + n.dot(pose.O);
    A.row(2 * axis + 1) = -n.transpose();
    b(2 * axis + 1) = half_extents(axis) - n.dot(pose.O);
  }
  return HPolytope::trusted(std::move(A), std::move(b));
}

/// Re-expresses `obstacle` in the body coordinates of `frame`: the result holds
/// y_body exactly when frame.R y_body + frame.O lies in the obstacle.
inline HPolytope transform_into_frame(const HPolytope& obstacle, const Pose& frame) {
  FaceMatrix A = obstacle.A() * frame.R;
  Eigen::VectorXd b = obstacle.b() - obstacle.A() * frame.O;
  return HPolytope::trusted(std::move(A), std::move(b));
}

inline void check_dual_dimensions(const HPolytope& M, const HPolytope& N, const DualPair& duals) {
  if (duals.lambda_M.size() != M.num_faces() || duals.lambda_N.size() != N.num_faces()) {
    throw Error(ErrorCode::DimensionMismatch, "dual sizes do not match the face counts");
  }
}

inline DualResiduals dual_residuals(const HPolytope& M, const HPolytope& N, const DualPair& duals) {
  check_dual_dimensions(M, N, duals);
  DualResiduals r;
  const Vec3 w = M.A().transpose() * duals.lambda_M;
  r.stationarity = N.A().transpose() * duals.lambda_N + w;
  r.norm_excess = std::max(0.0, w.norm() - 1.0);
  const double neg_M = duals.lambda_M.size() ? std::max(0.0, -duals.lambda_M.minCoeff()) : 0.0;
  const double neg_N = duals.lambda_N.size() ? std::max(0.0, -duals.lambda_N.minCoeff()) : 0.0;
  r.neg_violation = std::max(neg_M, neg_N);
  return r;
}

/// Lower bound on the separation of M and N certified by a feasible dual point.
inline double dual_margin(const HPolytope& M, const HPolytope& N, const DualPair& duals,
                          double feasibility_tol = 1e-6) {
  const DualResiduals r = dual_residuals(M, N, duals);
  if (r.max() > feasibility_tol) {
    throw Error(ErrorCode::InfeasibleDuals, "dual residual " + std::to_string(r.max()) + " exceeds tolerance");
  }
  return -duals.lambda_N.dot(N.b()) - duals.lambda_M.dot(M.b());
}

/// All vertices by exhaustive three-plane intersection (fine for up to ~30 faces).
inline std::vector<Vec3> vertex_enumeration(const HPolytope& P) {
  const int n = P.num_faces();
  if (n > 30) throw Error(ErrorCode::InvalidArgument, "vertex enumeration limited to 30 faces");
  std::vector<Vec3> vertices;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      for (int k = j + 1; k < n; ++k) {
        Mat3 M;
        M.row(0) = P.A().row(i);
        M.row(1) = P.A().row(j);
        M.row(2) = P.A().row(k);
        if (std::abs(M.determinant()) < 1e-10) continue;
        const Vec3 y = M.partialPivLu().solve(Vec3(P.b()(i), P.b()(j), P.b()(k)));
        if (!P.contains(y, 1e-9)) continue;
        const bool seen = std::any_of(vertices.begin(), vertices.end(),
                                      [&](const Vec3& v) { return (v - y).norm() <= 1e-8; });
        if (!seen) vertices.push_back(y);
      }
    }
  }
  if (vertices.size() < 4) throw Error(ErrorCode::DegeneratePolytope, "polytope has fewer than 4 vertices");
  return vertices;
}

/// Largest eps such that shrinking every face of both polytopes by eps keeps a
/// common point (negative when the polytopes are disjoint).
inline double common_interior_depth(const HPolytope& M, const HPolytope& N) {
  const int m = M.num_faces();
  const int n = N.num_faces();
  Eigen::MatrixXd G(m + n, 4);
  Eigen::VectorXd h(m + n);
  G.topLeftCorner(m, 3) = M.A();
  G.bottomLeftCorner(n, 3) = N.A();
  G.col(3).setOnes();
  h << M.b(), N.b();
  Eigen::VectorXd c = Eigen::VectorXd::Zero(4);
  c(3) = 1.0;
  const auto r = detail::solve_lp_free(G, h, c);
  if (r.status != detail::LpStatus::Optimal) {
    throw Error(ErrorCode::DegeneratePolytope, "interior depth LP did not reach an optimum");
  }
  return r.value;
}

/// Positive separation when disjoint (closest-point distance between vertex
/// hulls); otherwise the negated common interior depth, which is <= 0.
inline double signed_distance_oracle(const HPolytope& M, const std::vector<Vec3>& M_vertices,
                                     const HPolytope& N, const std::vector<Vec3>& N_vertices) {
  const auto cp = detail::gjk_closest_points(M_vertices, N_vertices);
  if (!cp.overlapping && cp.distance > 1e-9) return cp.distance;
  return -std::max(0.0, common_interior_depth(M, N));
}

inline double signed_distance_oracle(const HPolytope& M, const HPolytope& N) {
  return signed_distance_oracle(M, vertex_enumeration(M), N, vertex_enumeration(N));
}

/// Support function max_{y in P} dir . y together with its optimal face
/// multipliers: lambda >= 0, A^T lambda = dir, lambda . b = support value.
inline std::pair<double, Eigen::VectorXd> support_dual(const HPolytope& P, const Vec3& dir) {
  const int n = P.num_faces();
  Eigen::MatrixXd A(6, n);
  Eigen::VectorXd rhs(6);
  A.topRows(3) = P.A().transpose();
  A.bottomRows(3) = -P.A().transpose();
  rhs << dir, -dir;
  const auto r = detail::solve_lp_nonneg(A, rhs, -P.b());
  if (r.status != detail::LpStatus::Optimal) {
    throw Error(ErrorCode::DegeneratePolytope, "support LP failed");
  }
  return {-r.value, r.x};
}

/// Maximal dual lower bound for disjoint M and N, built from the optimal
/// separating direction. Returns the bound and the certifying duals.
inline std::pair<double, DualPair> max_dual_bound(const HPolytope& M, const HPolytope& N) {
  const auto Mv = vertex_enumeration(M);
  const auto Nv = vertex_enumeration(N);
  const auto cp = detail::gjk_closest_points(Mv, Nv);
  if (cp.overlapping || cp.distance <= 1e-12) {
    throw Error(ErrorCode::NotSeparated, "polytopes intersect or touch");
  }
  const Vec3 n = (cp.on_first - cp.on_second) / cp.distance;  // from N toward M
  auto [h_N, lambda_N] = support_dual(N, n);
  auto [h_M, lambda_M] = support_dual(M, -n);
  DualPair duals{std::move(lambda_M), std::move(lambda_N)};
  return {-h_N - h_M, std::move(duals)};
}

}  // namespace polyfly
