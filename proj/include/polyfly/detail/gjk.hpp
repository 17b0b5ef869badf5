#pragma once

// Gilbert-Johnson-Keerthi closest points between the convex hulls of two
// finite point sets. The sub-simplex search enumerates every face of the
// current simplex (at most 15) and keeps the minimum-norm valid projection,
// trading a little speed for robustness on the highly degenerate
// configurations (parallel box faces) that dominate this workload.

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace polyfly::detail {

struct ClosestPoints {
  double distance = 0.0;
  Eigen::Vector3d on_first = Eigen::Vector3d::Zero();   // point of conv(first)
  Eigen::Vector3d on_second = Eigen::Vector3d::Zero();  // point of conv(second)
  bool overlapping = false;
};

namespace gjk_internal {

struct SupportPoint {
  Eigen::Vector3d w;  // first - second
  int i = 0;
  int j = 0;
};

inline int support_index(const std::vector<Eigen::Vector3d>& pts, const Eigen::Vector3d& dir) {
  int best = 0;
  double best_dot = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < static_cast<int>(pts.size()); ++k) {
    const double d = pts[k].dot(dir);
    if (d > best_dot) {
      best_dot = d;
      best = k;
    }
  }
  return best;
}

// Minimum-norm point of the convex hull of `simplex`; shrinks the simplex to the
// supporting face and returns barycentric weights for it.
inline Eigen::Vector3d closest_on_simplex(std::vector<SupportPoint>& simplex, std::vector<double>& weights) {
  const int n = static_cast<int>(simplex.size());
  double best_norm = std::numeric_limits<double>::infinity();
  Eigen::Vector3d best_point = Eigen::Vector3d::Zero();
  unsigned best_mask = 0;
  std::array<double, 4> best_bary{};
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    std::array<int, 4> idx{};
    int k = 0;
    for (int t = 0; t < n; ++t) {
      if (mask & (1u << t)) idx[k++] = t;
    }
    std::array<double, 4> bary{};
    Eigen::Vector3d p;
    if (k == 1) {
      bary[0] = 1.0;
      p = simplex[idx[0]].w;
    } else {
      const Eigen::Vector3d& w0 = simplex[idx[0]].w;
      Eigen::Matrix<double, 3, Eigen::Dynamic> D(3, k - 1);
      for (int t = 1; t < k; ++t) D.col(t - 1) = simplex[idx[t]].w - w0;
      const Eigen::MatrixXd G = D.transpose() * D;
      const double scale = G.diagonal().maxCoeff();
      if (scale <= 0.0) continue;
      Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
      lu.setThreshold(1e-12);
      if (lu.rank() < k - 1) continue;
      const Eigen::VectorXd t = lu.solve(-D.transpose() * w0);
      double sum = 0.0;
      bool valid = true;
      for (int u = 0; u < k - 1; ++u) {
        bary[u + 1] = t(u);
        sum += t(u);
        if (t(u) <= 0.0) valid = false;
      }
      bary[0] = 1.0 - sum;
      if (bary[0] <= 0.0) valid = false;
      if (!valid) continue;
      p = w0 + D * t;
    }
    const double norm = p.norm();
    if (norm < best_norm) {
      best_norm = norm;
      best_point = p;
      best_mask = mask;
      best_bary = bary;
    }
  }
  std::vector<SupportPoint> reduced;
  weights.clear();
  int k = 0;
  for (int t = 0; t < n; ++t) {
    if (best_mask & (1u << t)) {
      reduced.push_back(simplex[t]);
      weights.push_back(best_bary[k++]);
    }
  }
  simplex = std::move(reduced);
  return best_point;
}

}  // namespace gjk_internal

inline ClosestPoints gjk_closest_points(const std::vector<Eigen::Vector3d>& first,
                                        const std::vector<Eigen::Vector3d>& second) {
  using gjk_internal::SupportPoint;
  std::vector<SupportPoint> simplex{{first[0] - second[0], 0, 0}};
  std::vector<double> weights{1.0};
  Eigen::Vector3d v = simplex[0].w;
  ClosestPoints out;
  for (int iter = 0; iter < 200; ++iter) {
    const double vv = v.squaredNorm();
    if (vv < 1e-28) {
      out.overlapping = true;
      break;
    }
    const int i = gjk_internal::support_index(first, -v);
    const int j = gjk_internal::support_index(second, v);
    const SupportPoint s{first[i] - second[j], i, j};
    // Relative duality-gap termination: ||v||^2 - v.w bounds ||v|| - dist.
    if (vv - v.dot(s.w) <= 1e-13 * vv + 1e-24) break;
    bool duplicate = false;
    for (const auto& p : simplex) {
      if (p.i == s.i && p.j == s.j) duplicate = true;
    }
    if (duplicate) break;
    simplex.push_back(s);
    v = gjk_internal::closest_on_simplex(simplex, weights);
    if (simplex.size() == 4) {
      out.overlapping = true;
      v.setZero();
      break;
    }
  }
  out.on_first.setZero();
  out.on_second.setZero();
  for (std::size_t t = 0; t < simplex.size(); ++t) {
    out.on_first += weights[t] * first[simplex[t].i];
    out.on_second += weights[t] * second[simplex[t].j];
  }
  out.distance = out.overlapping ? 0.0 : (out.on_first - out.on_second).norm();
  return out;
}

}  // namespace polyfly::detail
