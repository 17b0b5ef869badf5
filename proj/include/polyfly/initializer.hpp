#pragma once

// Solver initialization: a 26-connected A* seed under the vertical-cable
// assumption, equal-arclength resampling to the knot count, the payload
// velocity seed, and the remaining decision variables.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <tuple>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "polyfly/environment.hpp"
#include "polyfly/errors.hpp"
#include "polyfly/geometry.hpp"
#include "polyfly/trajectory.hpp"

namespace polyfly {

struct SeedPath {
  std::vector<Vec3> waypoints;
  double grid_resolution = 0.1;

  double length() const {
    double s = 0.0;
    for (std::size_t i = 1; i < waypoints.size(); ++i) s += (waypoints[i] - waypoints[i - 1]).norm();
    return s;
  }
};

using GridIndex = std::array<int, 3>;

/// Result of a search on an integer lattice. Cost is in lattice units and is
/// accumulated from the step-type counts, so equal-cost paths compare exactly.
struct GridPath {
  std::vector<GridIndex> nodes;
  std::array<int, 3> step_counts{};  // axis, face-diagonal, space-diagonal steps
  double cost = 0.0;
};

inline double lattice_cost(const std::array<int, 3>& counts) {
  return counts[0] * 1.0 + counts[1] * std::sqrt(2.0) + counts[2] * std::sqrt(3.0);
}

/// 26-connected A* on the box [0, dims) with Euclidean step costs and
/// heuristic. Ties in f are broken by g (larger first), then lexicographic node order.
inline std::optional<GridPath> astar_grid(const GridIndex& dims, const GridIndex& start, const GridIndex& goal,
                                          const std::function<bool(const GridIndex&)>& passable) {
  const auto inside = [&](const GridIndex& n) {
    return n[0] >= 0 && n[1] >= 0 && n[2] >= 0 && n[0] < dims[0] && n[1] < dims[1] && n[2] < dims[2];
  };
  const auto key = [&](const GridIndex& n) {
    return (static_cast<std::int64_t>(n[0]) * dims[1] + n[1]) * dims[2] + n[2];
  };
  const auto heuristic = [&](const GridIndex& n) {
    const double dx = n[0] - goal[0];
    const double dy = n[1] - goal[1];
    const double dz = n[2] - goal[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
  };
  if (!inside(start) || !inside(goal) || !passable(start) || !passable(goal)) return std::nullopt;

  struct Entry {
    double f;
    double g;
    GridIndex node;
    bool operator>(const Entry& o) const {
      if (f != o.f) return f > o.f;
      if (g != o.g) return g < o.g;
      return node > o.node;
    }
  };
  struct Record {
    double g = std::numeric_limits<double>::infinity();
    std::int64_t parent = -1;
    GridIndex node{};
    bool closed = false;
    bool passable = false;
    bool tested = false;
  };
  std::unordered_map<std::int64_t, Record> records;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  auto& rs = records[key(start)];
  rs.g = 0.0;
  rs.node = start;
  open.push({heuristic(start), 0.0, start});
  const std::int64_t goal_key = key(goal);
  while (!open.empty()) {
    const Entry top = open.top();
    open.pop();
    const std::int64_t k = key(top.node);
    Record& rec = records[k];
    if (rec.closed || top.g > rec.g) continue;
    rec.closed = true;
    if (k == goal_key) break;
    for (int dx = -1; dx <= 1; ++dx) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dz = -1; dz <= 1; ++dz) {
          if (dx == 0 && dy == 0 && dz == 0) continue;
          const GridIndex nb{top.node[0] + dx, top.node[1] + dy, top.node[2] + dz};
          if (!inside(nb)) continue;
          Record& nr = records[key(nb)];
          if (nr.closed) continue;
          if (!nr.tested) {
            nr.tested = true;
            nr.node = nb;
            nr.passable = passable(nb);
          }
          if (!nr.passable) continue;
          const double step = std::sqrt(static_cast<double>(dx * dx + dy * dy + dz * dz));
          const double g = records[k].g + step;
          if (g < nr.g) {
            nr.g = g;
            nr.parent = k;
            open.push({g + heuristic(nb), g, nb});
          }
        }
      }
    }
  }
  const auto it = records.find(goal_key);
  if (it == records.end() || !it->second.closed) return std::nullopt;
  GridPath path;
  for (std::int64_t k = goal_key; k != -1; k = records[k].parent) path.nodes.push_back(records[k].node);
  std::reverse(path.nodes.begin(), path.nodes.end());
  for (std::size_t i = 1; i < path.nodes.size(); ++i) {
    int order = 0;
    for (int a = 0; a < 3; ++a) order += path.nodes[i][a] != path.nodes[i - 1][a];
    ++path.step_counts[order - 1];
  }
  path.cost = lattice_cost(path.step_counts);
  return path;
}

/// Clearance test for a payload position under the vertical-cable, hover-attitude model.
class HoverClearance {
 public:
  HoverClearance(const Environment& env, const SystemParams& params, CollisionModel model = CollisionModel::ComponentWise)
      : env_(env), params_(params), components_(model_components(model)) {
    for (const auto& o : env.obstacles) {
      auto verts = vertex_enumeration(o.poly);
      Vec3 lo = verts[0];
      Vec3 hi = verts[0];
      for (const auto& v : verts) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
      }
      obstacle_vertices_.push_back(std::move(verts));
      obstacle_boxes_.emplace_back(lo, hi);
    }
  }

  bool clear(const Vec3& x_L) const {
    for (Component c : components_) {
      const auto pose = component_pose<double>(c, x_L, Vec3::Zero(), Vec3::Zero(), params_);
      const Vec3 half = component_half_extents(c, params_);
      const Pose world = to_pose(pose);
      const auto corners = box_corners(half, world);
      Vec3 lo = corners[0];
      Vec3 hi = corners[0];
      for (const auto& v : corners) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
      }
      std::optional<HPolytope> poly;
      for (std::size_t i = 0; i < env_.obstacles.size(); ++i) {
        const auto& [olo, ohi] = obstacle_boxes_[i];
        const Vec3 gap = (olo - hi).cwiseMax(lo - ohi).cwiseMax(0.0);
        if (gap.norm() >= env_.beta + 1e-9) continue;
        if (!poly) poly = make_box(half, world);
        const double d = signed_distance_oracle(env_.obstacles[i].poly, obstacle_vertices_[i], *poly, corners);
        if (d < env_.beta) return false;
      }
    }
    return true;
  }

 private:
  const Environment& env_;
  SystemParams params_;
  std::vector<Component> components_;
  std::vector<std::vector<Vec3>> obstacle_vertices_;
  std::vector<std::pair<Vec3, Vec3>> obstacle_boxes_;
};

/// Grid anchored at the start position; the goal is reached through its
/// nearest lattice node and appended exactly.
inline SeedPath astar_seed(const Environment& env, const SystemParams& params, double resolution,
                           CollisionModel model = CollisionModel::ComponentWise) {
  if (!(resolution > 0.0)) throw Error(ErrorCode::InvalidArgument, "grid resolution must be positive");
  const HoverClearance clearance(env, params, model);
  GridIndex dims{};
  GridIndex offset{};
  for (int a = 0; a < 3; ++a) {
    const int below = static_cast<int>(std::floor((env.start(a) - env.bounds_lo(a)) / resolution + 1e-9));
    const int above = static_cast<int>(std::floor((env.bounds_hi(a) - env.start(a)) / resolution + 1e-9));
    offset[a] = below;
    dims[a] = below + above + 1;
  }
  const auto to_world = [&](const GridIndex& n) {
    return Vec3(env.start(0) + (n[0] - offset[0]) * resolution, env.start(1) + (n[1] - offset[1]) * resolution,
                env.start(2) + (n[2] - offset[2]) * resolution);
  };
  GridIndex goal_node{};
  for (int a = 0; a < 3; ++a) {
    goal_node[a] = offset[a] + static_cast<int>(std::lround((env.goal(a) - env.start(a)) / resolution));
    goal_node[a] = std::clamp(goal_node[a], 0, dims[a] - 1);
  }
  const auto passable = [&](const GridIndex& n) {
    const Vec3 p = to_world(n);
    if ((p.array() <= env.bounds_lo.array()).any() || (p.array() >= env.bounds_hi.array()).any()) return false;
    return clearance.clear(p);
  };
  if (!clearance.clear(env.goal)) throw Error(ErrorCode::NoPath, "goal configuration violates the clearance margin");
  const auto grid = astar_grid(dims, offset, goal_node, passable);
  if (!grid) throw Error(ErrorCode::NoPath, "A* found no collision-free lattice path");
  SeedPath path;
  path.grid_resolution = resolution;
  for (const auto& n : grid->nodes) path.waypoints.push_back(to_world(n));
  path.waypoints.front() = env.start;
  if ((path.waypoints.back() - env.goal).norm() > 1e-12) {
    if (path.waypoints.size() > 1 && (path.waypoints.back() - env.goal).norm() < 0.5 * resolution) {
      path.waypoints.back() = env.goal;
    } else {
      path.waypoints.push_back(env.goal);
    }
  }
  return path;
}

/// N + 1 points at equal arclength along the polyline, endpoints exact.
inline std::vector<Vec3> resample(const SeedPath& path, int N) {
  if (N < 2) throw Error(ErrorCode::InvalidArgument, "resample needs N >= 2");
  const auto& w = path.waypoints;
  std::vector<double> cumulative{0.0};
  for (std::size_t i = 1; i < w.size(); ++i) cumulative.push_back(cumulative.back() + (w[i] - w[i - 1]).norm());
  const double total = cumulative.back();
  if (!(total > 0.0)) throw Error(ErrorCode::InvalidArgument, "path has zero length");
  std::vector<Vec3> out;
  out.reserve(N + 1);
  std::size_t seg = 1;
  for (int k = 0; k <= N; ++k) {
    if (k == 0) {
      out.push_back(w.front());
      continue;
    }
    if (k == N) {
      out.push_back(w.back());
      continue;
    }
    const double s = total * k / N;
    while (seg + 1 < w.size() && cumulative[seg] < s) ++seg;
    const double len = cumulative[seg] - cumulative[seg - 1];
    const double t = len > 0.0 ? (s - cumulative[seg - 1]) / len : 0.0;
    out.push_back(w[seg - 1] + t * (w[seg] - w[seg - 1]));
  }
  return out;
}

/// v_k = (x_{k+1} - x_k) / (dt_max - dt_min) for k < N, and v_N = 0.
inline std::vector<Vec3> seed_velocities(const std::vector<Vec3>& points, double dt_min, double dt_max) {
  if (dt_max == dt_min) throw Error(ErrorCode::DegenerateDtRange, "dt_max equals dt_min");
  if (!(dt_max > dt_min)) throw Error(ErrorCode::InvalidArgument, "dt_max must exceed dt_min");
  std::vector<Vec3> v(points.size(), Vec3::Zero());
  for (std::size_t k = 0; k + 1 < points.size(); ++k) v[k] = (points[k + 1] - points[k]) / (dt_max - dt_min);
  return v;
}

/// Complete bound-feasible starting point for the NLP.
inline Trajectory seed_all(const Environment& env, const SystemParams& params, const Weights& weights,
                           const PlanOptions& opts) {
  weights.validate();
  const SeedPath path = astar_seed(env, params, opts.grid_resolution);
  const auto points = resample(path, opts.N);
  std::vector<Vec3> velocities(points.size(), Vec3::Zero());
  if (opts.velocity_init) velocities = seed_velocities(points, weights.dt_min, weights.dt_max);
  const auto [lo, hi] = weights.state_bounds(env);

  Trajectory t;
  t.env_name = env.name;
  t.seed = true;
  t.model = opts.model;
  t.num_obstacles = env.num_obstacles();
  for (int k = 0; k <= opts.N; ++k) {
    StateVec s;
    s << points[k], velocities[k], Vec3::Zero();
    s = s.cwiseMax(lo).cwiseMin(hi);
    t.states.push_back(FlatState::from_stacked(s));
  }
  t.inputs.assign(opts.N, FlatInput{Vec3::Zero().cwiseMax(weights.u_lo).cwiseMin(weights.u_hi)});
  t.durations.assign(opts.N, 0.5 * (weights.dt_min + weights.dt_max));
  const auto components = model_components(opts.model);
  for (int k = 0; k <= opts.N; ++k) {
    for (Component c : components) {
      const int faces_N = component_body_polytope(c, params).num_faces();
      for (const auto& o : env.obstacles) {
        t.duals.push_back({Eigen::VectorXd::Constant(o.poly.num_faces(), opts.dual_seed),
                           Eigen::VectorXd::Constant(faces_N, opts.dual_seed)});
      }
    }
  }
  return t;
}

}  // namespace polyfly
