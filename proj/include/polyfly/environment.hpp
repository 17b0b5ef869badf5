#pragma once

// Environment data model, the per-stage robot component polytopes (quadrotor
// box posed by the reconstructed attitude, cable prism along the segment,
// axis-aligned payload box), and the environment JSON format.

#include <array>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "polyfly/errors.hpp"
#include "polyfly/flatness.hpp"
#include "polyfly/geometry.hpp"

namespace polyfly {

using json = nlohmann::json;

struct BoxSpec {
  Vec3 half_extents = Vec3::Ones();
  Vec3 origin = Vec3::Zero();
  Vec3 rpy = Vec3::Zero();
};

struct Obstacle {
  HPolytope poly;
  std::optional<BoxSpec> box;  // set when the obstacle was described as a box

  static Obstacle from_box(const BoxSpec& spec) {
    return {make_box(spec.half_extents, Pose::from_rpy(spec.rpy, spec.origin)), spec};
  }
};

struct Environment {
  std::string name = "unnamed";
  std::vector<Obstacle> obstacles;
  Vec3 bounds_lo = Vec3::Zero();
  Vec3 bounds_hi = Vec3::Ones();
  Vec3 start = Vec3::Zero();  // payload
  Vec3 goal = Vec3::Zero();   // payload
  double beta = 0.05;

  int num_obstacles() const { return static_cast<int>(obstacles.size()); }
};

enum class Component { Quad, Cable, Payload, Hull };

inline const char* component_name(Component c) {
  switch (c) {
    case Component::Quad: return "quad";
    case Component::Cable: return "cable";
    case Component::Payload: return "payload";
    case Component::Hull: return "hull";
  }
  return "?";
}

/// How the robot is modeled inside the collision constraints.
enum class CollisionModel {
  ComponentWise,   // quad, cable and payload as separate polytopes
  SinglePolytope,  // one hover-attitude box around the whole system
};

inline std::vector<Component> model_components(CollisionModel model) {
  if (model == CollisionModel::SinglePolytope) return {Component::Hull};
  return {Component::Quad, Component::Cable, Component::Payload};
}

struct ComponentSet {
  HPolytope quad;
  HPolytope cable;
  HPolytope payload;
};

template <typename T>
struct PoseT {
  Mat3T<T> R;
  Vec3T<T> O;
};

/// Box half-extents of a component in its own body frame.
inline Vec3 component_half_extents(Component c, const SystemParams& p) {
  switch (c) {
    case Component::Quad: return p.quad_half_extents;
    case Component::Cable: return Vec3(p.cable_halfwidth, p.cable_halfwidth, p.l / 2.0);
    case Component::Payload: return p.payload_half_extents;
    case Component::Hull: {
      const Vec3 xy = p.quad_half_extents.cwiseMax(p.payload_half_extents);
      return Vec3(std::max(xy.x(), p.cable_halfwidth), std::max(xy.y(), p.cable_halfwidth),
                  (p.l + p.quad_half_extents.z() + p.payload_half_extents.z()) / 2.0);
    }
  }
  return Vec3::Ones();
}

/// Body polytope of a component: a box centered at its body origin.
inline HPolytope component_body_polytope(Component c, const SystemParams& p) {
  return make_box(component_half_extents(c, p));
}

/// World pose of a component as a function of payload position, acceleration
/// and jerk. With `rotation_aware` false the quadrotor keeps identity attitude.
template <typename T>
PoseT<T> component_pose(Component c, const Vec3T<T>& x_L, const Vec3T<T>& a_L, const Vec3T<T>& j_L,
                        const SystemParams& p, bool rotation_aware = true) {
  PoseT<T> pose;
  switch (c) {
    case Component::Payload:
      pose.R = Mat3T<T>::Identity();
      pose.O = x_L;
      break;
    case Component::Hull:
      pose.R = Mat3T<T>::Identity();
      pose.O = x_L;
      pose.O(2) = pose.O(2) + (p.l + p.quad_half_extents.z() - p.payload_half_extents.z()) / 2.0;
      break;
    case Component::Cable: {
      const Vec3T<T> q = cable_direction<T>(a_L, p);
      pose.R = attitude_from_thrust<T>(Vec3T<T>(-q));
      pose.O = x_L - q * (p.l / 2.0);
      break;
    }
    case Component::Quad: {
      const auto k = cable_kinematics<T>(a_L, j_L, p);
      pose.R = rotation_aware ? attitude_from_thrust<T>(k.F) : Mat3T<T>::Identity();
      pose.O = x_L - k.q * p.l;
      break;
    }
  }
  return pose;
}

inline Pose to_pose(const PoseT<double>& p) { return Pose(p.R, p.O); }

inline HPolytope quad_polytope(const QuadState& qs, const SystemParams& p) {
  return make_box(p.quad_half_extents, Pose(qs.R_Q, qs.x_Q));
}

inline HPolytope cable_polytope(const Vec3& x_Q, const Vec3& x_L, const SystemParams& p) {
  const Vec3 axis = x_Q - x_L;
  const double length = axis.norm();
  if (!(length > 1e-12)) throw Error(ErrorCode::DegenerateSegment, "cable endpoints coincide");
  const Vec3 d = axis / length;
  const double yaw = d.cross(Vec3::UnitX()).norm() < 1e-6 ? M_PI / 2.0 : 0.0;
  const Mat3 R = attitude_from_thrust(d, yaw);
  return make_box(Vec3(p.cable_halfwidth, p.cable_halfwidth, length / 2.0), Pose(R, (x_Q + x_L) / 2.0));
}

inline HPolytope payload_polytope(const Vec3& x_L, const SystemParams& p) {
  return make_box(p.payload_half_extents, Pose::translation(x_L));
}

inline HPolytope hull_polytope(const Vec3& x_L, const SystemParams& p) {
  const auto pose = component_pose<double>(Component::Hull, x_L, Vec3::Zero(), Vec3::Zero(), p);
  return make_box(component_half_extents(Component::Hull, p), to_pose(pose));
}

inline ComponentSet component_set(const FlatState& x, const FlatInput& u, const SystemParams& p) {
  const QuadState qs = flat_to_quad(x, u, p);
  return {quad_polytope(qs, p), cable_polytope(qs.x_Q, x.x_L, p), payload_polytope(x.x_L, p)};
}

/// Polytope of `c` in world coordinates for the given flat state and input.
inline HPolytope component_polytope(Component c, const FlatState& x, const FlatInput& u, const SystemParams& p,
                                    bool rotation_aware = true) {
  if (c == Component::Cable) {
    const QuadState qs = flat_to_quad(x, u, p);
    return cable_polytope(qs.x_Q, x.x_L, p);
  }
  const auto pose = component_pose<double>(c, x.x_L, x.a_L, u.j_L, p, rotation_aware);
  return make_box(component_half_extents(c, p), to_pose(pose));
}

/// Box corners of `c` in world coordinates (vertex set for the distance oracle).
inline std::vector<Vec3> box_corners(const Vec3& half_extents, const Pose& pose) {
  std::vector<Vec3> corners;
  corners.reserve(8);
  for (int sx : {-1, 1}) {
    for (int sy : {-1, 1}) {
      for (int sz : {-1, 1}) {
        corners.push_back(pose.apply(half_extents.cwiseProduct(Vec3(sx, sy, sz))));
      }
    }
  }
  return corners;
}

// ---------------------------------------------------------------------------
// JSON format

namespace env_json {

inline Vec3 read_vec3(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::ParseError, field + ": expected an array of 3 numbers");
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw Error(ErrorCode::ParseError, field + "[" + std::to_string(i) + "]: not a number");
    v(i) = j[i].get<double>();
  }
  return v;
}

inline json write_vec3(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline const json& require(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw Error(ErrorCode::ParseError, where + ": missing field '" + key + "'");
  return j.at(key);
}

inline Obstacle read_obstacle(const json& j, const std::string& where) {
  if (j.contains("box")) {
    const json& box = j.at("box");
    BoxSpec spec;
    spec.half_extents = read_vec3(require(box, "half_extents", where + ".box"), where + ".box.half_extents");
    spec.origin = box.contains("origin") ? read_vec3(box.at("origin"), where + ".box.origin") : Vec3::Zero();
    spec.rpy = box.contains("rpy") ? read_vec3(box.at("rpy"), where + ".box.rpy") : Vec3::Zero();
    try {
      return Obstacle::from_box(spec);
    } catch (const Error& e) {
      throw Error(ErrorCode::ParseError, where + ".box: " + e.what());
    }
  }
  const json& A = require(j, "A", where);
  const json& b = require(j, "b", where);
  if (!A.is_array() || !b.is_array() || A.size() != b.size()) {
    throw Error(ErrorCode::ParseError, where + ": A and b must be arrays of equal length");
  }
  FaceMatrix Am(A.size(), 3);
  Eigen::VectorXd bv(b.size());
  for (std::size_t i = 0; i < A.size(); ++i) {
    const std::string row = where + ".A[" + std::to_string(i) + "]";
    Am.row(static_cast<Eigen::Index>(i)) = read_vec3(A[i], row).transpose();
    if (Am.row(static_cast<Eigen::Index>(i)).norm() <= 1e-12) throw Error(ErrorCode::ParseError, row + ": zero normal");
    if (!b[i].is_number()) throw Error(ErrorCode::ParseError, where + ".b[" + std::to_string(i) + "]: not a number");
    bv(static_cast<Eigen::Index>(i)) = b[i].get<double>();
  }
  try {
    return {HPolytope(std::move(Am), std::move(bv)), std::nullopt};
  } catch (const Error& e) {
    throw Error(ErrorCode::ParseError, where + ": " + e.what());
  }
}

inline json write_obstacle(const Obstacle& o) {
  if (o.box) {
    return {{"box",
             {{"half_extents", write_vec3(o.box->half_extents)},
              {"origin", write_vec3(o.box->origin)},
              {"rpy", write_vec3(o.box->rpy)}}}};
  }
  json A = json::array();
  json b = json::array();
  for (int i = 0; i < o.poly.num_faces(); ++i) {
    A.push_back(write_vec3(o.poly.A().row(i).transpose()));
    b.push_back(o.poly.b()(i));
  }
  return {{"A", A}, {"b", b}};
}

}  // namespace env_json

/// Checks bounds, start/goal placement and hover clearance of all three components.
inline void validate_environment(const Environment& env, const SystemParams& params) {
  if (!(env.beta > 0.0)) throw Error(ErrorCode::InvalidEnvironment, "beta must be positive");
  if (!(env.bounds_lo.array() < env.bounds_hi.array()).all()) {
    throw Error(ErrorCode::InvalidEnvironment, "bounds.lo must be below bounds.hi");
  }
  for (const auto& [label, point] : {std::pair{"start", env.start}, std::pair{"goal", env.goal}}) {
    if (!((point.array() > env.bounds_lo.array()).all() && (point.array() < env.bounds_hi.array()).all())) {
      throw Error(ErrorCode::InvalidEnvironment, std::string(label) + " is not strictly inside bounds");
    }
    FlatState hover;
    hover.x_L = point;
    const ComponentSet parts = component_set(hover, FlatInput{}, params);
    for (std::size_t i = 0; i < env.obstacles.size(); ++i) {
      for (const auto* part : {&parts.quad, &parts.cable, &parts.payload}) {
        const double d = signed_distance_oracle(env.obstacles[i].poly, *part);
        if (d < env.beta) {
          throw Error(ErrorCode::InvalidEnvironment, std::string(label) + " hover configuration is within beta of obstacle " +
                                                         std::to_string(i) + " (distance " + std::to_string(d) + ")");
        }
      }
    }
  }
}

inline json environment_to_json(const Environment& env) {
  json obstacles = json::array();
  for (const auto& o : env.obstacles) obstacles.push_back(env_json::write_obstacle(o));
  return {{"name", env.name},
          {"beta", env.beta},
          {"bounds", {{"lo", env_json::write_vec3(env.bounds_lo)}, {"hi", env_json::write_vec3(env.bounds_hi)}}},
          {"start", env_json::write_vec3(env.start)},
          {"goal", env_json::write_vec3(env.goal)},
          {"obstacles", obstacles}};
}

inline Environment environment_from_json(const json& j) {
  using env_json::read_vec3;
  using env_json::require;
  Environment env;
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "environment root must be an object");
  env.name = j.value("name", "unnamed");
  const json& beta = require(j, "beta", "environment");
  if (!beta.is_number()) throw Error(ErrorCode::ParseError, "beta: not a number");
  env.beta = beta.get<double>();
  const json& bounds = require(j, "bounds", "environment");
  env.bounds_lo = read_vec3(require(bounds, "lo", "bounds"), "bounds.lo");
  env.bounds_hi = read_vec3(require(bounds, "hi", "bounds"), "bounds.hi");
  env.start = read_vec3(require(j, "start", "environment"), "start");
  env.goal = read_vec3(require(j, "goal", "environment"), "goal");
  const json& obstacles = require(j, "obstacles", "environment");
  if (!obstacles.is_array()) throw Error(ErrorCode::ParseError, "obstacles: expected an array");
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    env.obstacles.push_back(env_json::read_obstacle(obstacles[i], "obstacles[" + std::to_string(i) + "]"));
  }
  return env;
}

/// Canonical text: sorted keys, shortest round-trip float formatting.
inline std::string dump_canonical(const json& j) { return j.dump(2) + "\n"; }

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << text;
}

inline Environment load_environment(const std::string& path, const SystemParams& params = {}) {
  Environment env = environment_from_json(read_json_file(path));
  validate_environment(env, params);
  return env;
}

inline void save_environment(const Environment& env, const std::string& path) {
  write_text_file(path, dump_canonical(environment_to_json(env)));
}

}  // namespace polyfly
