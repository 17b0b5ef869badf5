#pragma once

// Certification of a trajectory that never looks at its dual variables.
// Distances come from the geometric oracle on the physical robot (quadrotor
// box posed by the reconstructed attitude, cable prism, payload box), the
// dynamics are re-integrated from the first knot, and boundary and box bounds
// are checked directly.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "polyfly/environment.hpp"
#include "polyfly/errors.hpp"
#include "polyfly/flatness.hpp"
#include "polyfly/geometry.hpp"
#include "polyfly/trajectory.hpp"

namespace polyfly {

struct ValidationOptions {
  int subsamples = 10;  // per interval, counting the left knot
  double distance_tol = 1e-4;
  double defect_tol = 1e-5;
  double residual_tol = 1e-5;
  double bound_tol = 1e-8;
};

/// Closest approach of one component to one obstacle.
struct Offense {
  int stage = -1;
  int component = -1;
  int obstacle = -1;
  double distance = std::numeric_limits<double>::infinity();
  double time = 0.0;
  bool at_knot = true;
};

struct ValidationReport {
  Eigen::MatrixXd per_stage_min_distance;  // (N+1) x 3 over all obstacles
  double knot_min_distance = std::numeric_limits<double>::infinity();
  double subsample_min_distance = std::numeric_limits<double>::infinity();
  double dynamics_defect_max = 0.0;
  double boundary_residual_max = 0.0;
  double bound_violation_max = 0.0;
  double quad_endpoint_speed = 0.0;  // |v_Q| and |a_Q| at the endpoints
  double quad_endpoint_accel = 0.0;
  double total_time = 0.0;
  double path_length = 0.0;
  Offense worst;  // smallest distance seen at knots or sub-samples
  bool knots_clear = false;
  bool intersample_violation = false;
  bool pass = false;
  std::string failure;  // empty on pass
};

namespace validate_detail {

inline const std::vector<Component>& physical_components() {
  static const std::vector<Component> comps{Component::Quad, Component::Cable, Component::Payload};
  return comps;
}

/// Oracle distance of every physical component to every obstacle.
inline Eigen::RowVector3d distances_at(const FlatState& s, const FlatInput& u, const Environment& env,
                                       const SystemParams& params,
                                       const std::vector<std::vector<Vec3>>& obstacle_vertices, int stage,
                                       double time, bool at_knot, Offense& worst) {
  Eigen::RowVector3d per_component;
  const QuadState qs = flat_to_quad(s, u, params);
  const std::array<HPolytope, 3> polys{quad_polytope(qs, params), cable_polytope(qs.x_Q, s.x_L, params),
                                       payload_polytope(s.x_L, params)};
  for (int c = 0; c < 3; ++c) {
    const auto verts = vertex_enumeration(polys[c]);
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < env.num_obstacles(); ++i) {
      const double d = signed_distance_oracle(env.obstacles[i].poly, obstacle_vertices[i], polys[c], verts);
      best = std::min(best, d);
      if (d < worst.distance) worst = {stage, c, i, d, time, at_knot};
    }
    per_component(c) = best;
  }
  return per_component;
}

}  // namespace validate_detail

inline ValidationReport validate(const Trajectory& traj, const Environment& env, const SystemParams& params,
                                 const Weights& weights, const ValidationOptions& opts = {}) {
  traj.check_dimensions();
  if (opts.subsamples < 1) throw Error(ErrorCode::InvalidArgument, "need at least one sample per interval");
  const int N = traj.N();
  ValidationReport r;
  r.total_time = traj.total_time();
  for (int k = 0; k < N; ++k) r.path_length += (traj.states[k + 1].x_L - traj.states[k].x_L).norm();

  // Dynamics: roll out from the first knot with the stored inputs.
  FlatState x = traj.states[0];
  for (int k = 0; k < N; ++k) {
    x = rk4_step(x, traj.inputs[k], traj.durations[k]);
    r.dynamics_defect_max =
        std::max(r.dynamics_defect_max, (x.stacked() - traj.states[k + 1].stacked()).cwiseAbs().maxCoeff());
  }

  const FlatState& first = traj.states.front();
  const FlatState& last = traj.states.back();
  const double boundary[] = {(first.x_L - env.start).cwiseAbs().maxCoeff(), (last.x_L - env.goal).cwiseAbs().maxCoeff(),
                             first.v_L.cwiseAbs().maxCoeff(),           last.v_L.cwiseAbs().maxCoeff(),
                             first.a_L.cwiseAbs().maxCoeff(),           last.a_L.cwiseAbs().maxCoeff(),
                             traj.inputs.front().j_L.cwiseAbs().maxCoeff(),
                             traj.inputs.back().j_L.cwiseAbs().maxCoeff()};
  r.boundary_residual_max = *std::max_element(std::begin(boundary), std::end(boundary));

  const auto [lo, hi] = weights.state_bounds(env);
  for (const auto& s : traj.states) {
    const StateVec v = s.stacked();
    r.bound_violation_max = std::max({r.bound_violation_max, (lo - v).maxCoeff(), (v - hi).maxCoeff()});
  }
  for (const auto& u : traj.inputs) {
    r.bound_violation_max =
        std::max({r.bound_violation_max, (weights.u_lo - u.j_L).maxCoeff(), (u.j_L - weights.u_hi).maxCoeff()});
  }
  for (double dt : traj.durations) {
    r.bound_violation_max = std::max({r.bound_violation_max, weights.dt_min - dt, dt - weights.dt_max});
  }

  r.per_stage_min_distance = Eigen::MatrixXd::Constant(N + 1, 3, std::numeric_limits<double>::infinity());
  try {
    for (int e : {0, N}) {
      const QuadState qs = flat_to_quad(traj.states[e], traj.input_at_knot(e), params);
      r.quad_endpoint_speed = std::max(r.quad_endpoint_speed, qs.v_Q.norm());
      r.quad_endpoint_accel = std::max(r.quad_endpoint_accel, qs.a_Q.norm());
    }
    if (env.num_obstacles() > 0) {
      std::vector<std::vector<Vec3>> obstacle_vertices;
      for (const auto& o : env.obstacles) obstacle_vertices.push_back(vertex_enumeration(o.poly));
      double t = 0.0;
      Offense worst_knot;
      Offense worst_sub;
      for (int k = 0; k <= N; ++k) {
        r.per_stage_min_distance.row(k) = validate_detail::distances_at(
            traj.states[k], traj.input_at_knot(k), env, params, obstacle_vertices, k, t, true, worst_knot);
        if (k == N) break;
        for (int s = 1; s < opts.subsamples; ++s) {
          const double tau = traj.durations[k] * s / opts.subsamples;
          const FlatState xs = constant_jerk_flow(traj.states[k], traj.inputs[k], tau);
          validate_detail::distances_at(xs, traj.inputs[k], env, params, obstacle_vertices, k, t + tau, false,
                                        worst_sub);
        }
        t += traj.durations[k];
      }
      r.knot_min_distance = worst_knot.distance;
      r.subsample_min_distance = std::min(worst_knot.distance, worst_sub.distance);
      r.worst = worst_sub.distance < worst_knot.distance ? worst_sub : worst_knot;
    }
  } catch (const Error& e) {
    r.failure = std::string("attitude reconstruction failed: ") + e.what();
    return r;
  }

  const double need = env.beta - opts.distance_tol;
  r.knots_clear = r.knot_min_distance >= need;
  const bool subs_clear = r.subsample_min_distance >= need;
  r.intersample_violation = r.knots_clear && !subs_clear;

  if (!r.knots_clear) {
    r.failure = "clearance below beta at a knot";
  } else if (r.intersample_violation) {
    r.failure = "clearance below beta between knots";
  } else if (r.dynamics_defect_max > opts.defect_tol) {
    r.failure = "re-integrated dynamics disagree with the stored states";
  } else if (r.boundary_residual_max > opts.residual_tol) {
    r.failure = "boundary conditions not met";
  } else if (r.bound_violation_max > opts.bound_tol) {
    r.failure = "box bounds violated";
  }
  r.pass = r.failure.empty();
  return r;
}

inline nlohmann::json validation_to_json(const ValidationReport& r) {
  nlohmann::json per_stage = nlohmann::json::array();
  for (Eigen::Index k = 0; k < r.per_stage_min_distance.rows(); ++k) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < r.per_stage_min_distance.cols(); ++c) {
      const double d = r.per_stage_min_distance(k, c);
      row.push_back(std::isfinite(d) ? nlohmann::json(d) : nlohmann::json(nullptr));
    }
    per_stage.push_back(row);
  }
  auto finite = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  static const char* names[] = {"quad", "cable", "payload"};
  nlohmann::json worst = nullptr;
  if (r.worst.stage >= 0) {
    worst = {{"stage", r.worst.stage},
             {"component", names[r.worst.component]},
             {"obstacle", r.worst.obstacle},
             {"distance", r.worst.distance},
             {"time", r.worst.time},
             {"at_knot", r.worst.at_knot}};
  }
  return {{"pass", r.pass},
          {"failure", r.failure},
          {"intersample_violation", r.intersample_violation},
          {"knot_min_distance", finite(r.knot_min_distance)},
          {"subsample_min_distance", finite(r.subsample_min_distance)},
          {"dynamics_defect_max", r.dynamics_defect_max},
          {"boundary_residual_max", r.boundary_residual_max},
          {"bound_violation_max", r.bound_violation_max},
          {"quad_endpoint_speed", r.quad_endpoint_speed},
          {"quad_endpoint_accel", r.quad_endpoint_accel},
          {"total_time", r.total_time},
          {"path_length", r.path_length},
          {"worst", worst},
          {"per_stage_min_distance", per_stage}};
}

/// Side-by-side summary of two validated trajectories.
struct Comparison {
  double time_a = 0.0, time_b = 0.0;
  double length_a = 0.0, length_b = 0.0;
  double clearance_a = 0.0, clearance_b = 0.0;
  bool pass_a = false, pass_b = false;

  double time_diff() const { return time_b - time_a; }
  double length_diff() const { return length_b - length_a; }
  double clearance_diff() const { return clearance_b - clearance_a; }
};

inline Comparison compare(const ValidationReport& a, const ValidationReport& b) {
  return {a.total_time,           b.total_time, a.path_length, b.path_length, a.subsample_min_distance,
          b.subsample_min_distance, a.pass,       b.pass};
}

inline Comparison compare(const Trajectory& a, const Trajectory& b, const Environment& env, const SystemParams& params,
                          const Weights& weights, const ValidationOptions& opts = {}) {
  return compare(validate(a, env, params, weights, opts), validate(b, env, params, weights, opts));
}

}  // namespace polyfly
