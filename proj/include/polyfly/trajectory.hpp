#pragma once

// Planner configuration (cost weights, box bounds, solver tolerances) and the
// trajectory container shared by the initializer, the NLP and the validator,
// together with their JSON forms.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "polyfly/environment.hpp"
#include "polyfly/errors.hpp"
#include "polyfly/flatness.hpp"
#include "polyfly/geometry.hpp"

namespace polyfly {

using StateVec = Eigen::Matrix<double, 9, 1>;

struct Weights {
  double alpha_to = 1e3;
  double alpha_u = 1e-2;
  double alpha_g = 5.0;
  double alpha_td = 1e-1;
  double dt_min = 0.01;
  double dt_max = 0.25;
  // Payload position rows left infinite fall back to the environment bounds.
  StateVec x_lo = (StateVec() << -kInf, -kInf, -kInf, -6, -6, -6, -5, -5, -5).finished();
  StateVec x_hi = (StateVec() << kInf, kInf, kInf, 6, 6, 6, 5, 5, 5).finished();
  Vec3 u_lo = Vec3::Constant(-6.0);
  Vec3 u_hi = Vec3::Constant(6.0);

  static constexpr double kInf = std::numeric_limits<double>::infinity();

  void validate() const {
    if (!(dt_max > dt_min && dt_min > 0.0)) throw Error(ErrorCode::InvalidArgument, "need dt_max > dt_min > 0");
    if (!(alpha_to > 0.0)) throw Error(ErrorCode::InvalidArgument, "alpha_to must be positive");
    if (alpha_u < 0.0 || alpha_g < 0.0 || alpha_td < 0.0) {
      throw Error(ErrorCode::InvalidArgument, "cost weights must be nonnegative");
    }
    if (!(x_lo.array() <= x_hi.array()).all() || !(u_lo.array() <= u_hi.array()).all()) {
      throw Error(ErrorCode::InvalidArgument, "box bounds are inverted");
    }
  }

  /// State bounds with infinite position rows replaced by the environment box.
  std::pair<StateVec, StateVec> state_bounds(const Environment& env) const {
    StateVec lo = x_lo;
    StateVec hi = x_hi;
    for (int i = 0; i < 3; ++i) {
      if (std::isinf(lo(i))) lo(i) = env.bounds_lo(i);
      if (std::isinf(hi(i))) hi(i) = env.bounds_hi(i);
    }
    return {lo, hi};
  }
};

struct SolverOptions {
  double constraint_tol = 1e-5;
  double kkt_tol = 1e-4;
  int max_iterations = 3000;
  double initial_barrier = 0.1;
  bool verbose = false;
};

/// What the planner is asked to model.
struct PlanOptions {
  int N = 60;
  CollisionModel model = CollisionModel::ComponentWise;
  bool rotation_aware = true;
  bool velocity_init = true;
  double grid_resolution = 0.1;
  double dual_seed = 0.01;
  // Replace seeded duals by maximal dual-bound certificates of the seed pose
  // wherever the component is separated from the obstacle.
  bool certificate_warm_start = true;
  // Require the separating plane found at knot k to also clear every vertex
  // of the component at knot k+1, so consecutive poses share a certificate.
  bool swept_collision = true;
  // Added to the environment clearance inside the planner only.
  double clearance_margin = 0.01;
};

struct Trajectory {
  std::string env_name;
  std::vector<FlatState> states;  // N + 1
  std::vector<FlatInput> inputs;  // N
  std::vector<double> durations;  // N
  CollisionModel model = CollisionModel::ComponentWise;
  int num_obstacles = 0;
  // duals[(k * num_components + c) * num_obstacles + i]
  std::vector<DualPair> duals;
  bool seed = false;

  int N() const { return static_cast<int>(durations.size()); }
  int num_components() const { return static_cast<int>(model_components(model).size()); }

  std::size_t dual_index(int k, int c, int i) const {
    return (static_cast<std::size_t>(k) * num_components() + c) * num_obstacles + i;
  }

  /// Input applied at knot k; the terminal knot reuses the last interval's input.
  const FlatInput& input_at_knot(int k) const { return inputs[std::min(k, N() - 1)]; }

  double total_time() const {
    double t = 0.0;
    for (double dt : durations) t += dt;
    return t;
  }

  void check_dimensions() const {
    const int n = N();
    if (n < 1 || static_cast<int>(states.size()) != n + 1 || static_cast<int>(inputs.size()) != n) {
      throw Error(ErrorCode::DimensionMismatch, "trajectory needs N+1 states, N inputs and N durations");
    }
    if (!duals.empty() && duals.size() != static_cast<std::size_t>(n + 1) * num_components() * num_obstacles) {
      throw Error(ErrorCode::DimensionMismatch, "dual count does not match stages x components x obstacles");
    }
  }
};

// ---------------------------------------------------------------------------
// JSON

namespace traj_json {

inline json vec(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Eigen::VectorXd read_vec(const json& j, const std::string& field) {
  if (!j.is_array()) throw Error(ErrorCode::ParseError, field + ": expected an array");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw Error(ErrorCode::ParseError, field + "[" + std::to_string(i) + "]: not a number");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

inline const char* model_name(CollisionModel m) {
  return m == CollisionModel::SinglePolytope ? "single-polytope" : "component-wise";
}

inline CollisionModel parse_model(const std::string& s) {
  if (s == "component-wise") return CollisionModel::ComponentWise;
  if (s == "single-polytope") return CollisionModel::SinglePolytope;
  throw Error(ErrorCode::ParseError, "unknown collision model '" + s + "'");
}

}  // namespace traj_json

inline json trajectory_to_json(const Trajectory& t) {
  using traj_json::vec;
  json states = json::array();
  for (const auto& s : t.states) states.push_back({vec(s.x_L), vec(s.v_L), vec(s.a_L)});
  json inputs = json::array();
  for (const auto& u : t.inputs) inputs.push_back(vec(u.j_L));
  json lm = json::array();
  json ln = json::array();
  for (const auto& d : t.duals) {
    lm.push_back(vec(d.lambda_M));
    ln.push_back(vec(d.lambda_N));
  }
  return {{"env_name", t.env_name},
          {"N", t.N()},
          {"seed", t.seed},
          {"model", traj_json::model_name(t.model)},
          {"states", states},
          {"inputs", inputs},
          {"durations", t.durations},
          {"duals",
           {{"num_obstacles", t.num_obstacles},
            {"num_components", t.num_components()},
            {"order", "stage-major, then component, then obstacle"},
            {"lambda_M", lm},
            {"lambda_N", ln}}}};
}

inline Trajectory trajectory_from_json(const json& j) {
  using traj_json::read_vec;
  Trajectory t;
  try {
    t.env_name = j.value("env_name", "");
    t.seed = j.value("seed", false);
    t.model = traj_json::parse_model(j.value("model", "component-wise"));
    for (const auto& s : j.at("states")) {
      FlatState fs;
      fs.x_L = read_vec(s.at(0), "states.x_L");
      fs.v_L = read_vec(s.at(1), "states.v_L");
      fs.a_L = read_vec(s.at(2), "states.a_L");
      t.states.push_back(fs);
    }
    for (const auto& u : j.at("inputs")) t.inputs.push_back({read_vec(u, "inputs")});
    for (const auto& d : j.at("durations")) t.durations.push_back(d.get<double>());
    if (j.contains("duals")) {
      const json& d = j.at("duals");
      t.num_obstacles = d.value("num_obstacles", 0);
      const json& lm = d.at("lambda_M");
      const json& ln = d.at("lambda_N");
      for (std::size_t i = 0; i < lm.size(); ++i) {
        t.duals.push_back({read_vec(lm[i], "duals.lambda_M"), read_vec(ln.at(i), "duals.lambda_N")});
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("trajectory: ") + e.what());
  }
  if (j.contains("N") && j.at("N").get<int>() != t.N()) {
    throw Error(ErrorCode::DimensionMismatch, "trajectory N field disagrees with durations");
  }
  t.check_dimensions();
  return t;
}

inline json weights_to_json(const Weights& w) {
  auto finite_or_null = [](const StateVec& v) {
    json a = json::array();
    for (int i = 0; i < 9; ++i) a.push_back(std::isinf(v(i)) ? json(nullptr) : json(v(i)));
    return a;
  };
  return {{"alpha_to", w.alpha_to}, {"alpha_u", w.alpha_u},   {"alpha_g", w.alpha_g},
          {"alpha_td", w.alpha_td}, {"dt_min", w.dt_min},     {"dt_max", w.dt_max},
          {"x_lo", finite_or_null(w.x_lo)}, {"x_hi", finite_or_null(w.x_hi)},
          {"u_lo", traj_json::vec(w.u_lo)}, {"u_hi", traj_json::vec(w.u_hi)}};
}

inline Weights weights_from_json(const json& j) {
  Weights w;
  w.alpha_to = j.value("alpha_to", w.alpha_to);
  w.alpha_u = j.value("alpha_u", w.alpha_u);
  w.alpha_g = j.value("alpha_g", w.alpha_g);
  w.alpha_td = j.value("alpha_td", w.alpha_td);
  w.dt_min = j.value("dt_min", w.dt_min);
  w.dt_max = j.value("dt_max", w.dt_max);
  auto read_state = [&](const char* key, StateVec& v, double fill) {
    if (!j.contains(key)) return;
    const json& a = j.at(key);
    if (!a.is_array() || a.size() != 9) throw Error(ErrorCode::ParseError, std::string(key) + ": expected 9 entries");
    for (int i = 0; i < 9; ++i) v(i) = a[i].is_null() ? fill : a[i].get<double>();
  };
  read_state("x_lo", w.x_lo, -Weights::kInf);
  read_state("x_hi", w.x_hi, Weights::kInf);
  if (j.contains("u_lo")) w.u_lo = traj_json::read_vec(j.at("u_lo"), "u_lo");
  if (j.contains("u_hi")) w.u_hi = traj_json::read_vec(j.at("u_hi"), "u_hi");
  w.validate();
  return w;
}

inline json params_to_json(const SystemParams& p) {
  return {{"m_Q", p.m_Q},
          {"m_L", p.m_L},
          {"l", p.l},
          {"g", p.g},
          {"quad_half_extents", traj_json::vec(p.quad_half_extents)},
          {"payload_half_extents", traj_json::vec(p.payload_half_extents)},
          {"cable_halfwidth", p.cable_halfwidth},
          {"eps_taut", p.eps_taut}};
}

inline SystemParams params_from_json(const json& j) {
  SystemParams p;
  p.m_Q = j.value("m_Q", p.m_Q);
  p.m_L = j.value("m_L", p.m_L);
  p.l = j.value("l", p.l);
  p.g = j.value("g", p.g);
  if (j.contains("quad_half_extents")) p.quad_half_extents = traj_json::read_vec(j.at("quad_half_extents"), "quad_half_extents");
  if (j.contains("payload_half_extents")) {
    p.payload_half_extents = traj_json::read_vec(j.at("payload_half_extents"), "payload_half_extents");
  }
  p.cable_halfwidth = j.value("cable_halfwidth", p.cable_halfwidth);
  p.eps_taut = j.value("eps_taut", p.eps_taut);
  p.validate();
  return p;
}

inline json solver_options_to_json(const SolverOptions& s) {
  return {{"constraint_tol", s.constraint_tol},
          {"kkt_tol", s.kkt_tol},
          {"max_iterations", s.max_iterations},
          {"initial_barrier", s.initial_barrier}};
}

inline SolverOptions solver_options_from_json(const json& j) {
  SolverOptions s;
  s.constraint_tol = j.value("constraint_tol", s.constraint_tol);
  s.kkt_tol = j.value("kkt_tol", s.kkt_tol);
  s.max_iterations = j.value("max_iterations", s.max_iterations);
  s.initial_barrier = j.value("initial_barrier", s.initial_barrier);
  return s;
}

}  // namespace polyfly
