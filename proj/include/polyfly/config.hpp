#pragma once

// Run configuration: every tunable of a planning run in one JSON document.
//
//   { "params": {...}, "weights": {...}, "solver": {...},
//     "plan": {...}, "validation": {...} }
//
// Every section and every key is optional; missing entries keep defaults.

#include <string>

#include <json.hpp>

#include "polyfly/environment.hpp"
#include "polyfly/errors.hpp"
#include "polyfly/trajectory.hpp"
#include "polyfly/validator.hpp"

namespace polyfly {

struct RunConfig {
  SystemParams params;
  Weights weights;
  SolverOptions solver;
  PlanOptions plan;
  ValidationOptions validation;
};

inline json plan_options_to_json(const PlanOptions& o) {
  return {{"N", o.N},
          {"model", traj_json::model_name(o.model)},
          {"rotation_aware", o.rotation_aware},
          {"velocity_init", o.velocity_init},
          {"grid_resolution", o.grid_resolution},
          {"dual_seed", o.dual_seed},
          {"certificate_warm_start", o.certificate_warm_start},
          {"swept_collision", o.swept_collision},
          {"clearance_margin", o.clearance_margin}};
}

inline PlanOptions plan_options_from_json(const json& j) {
  PlanOptions o;
  o.N = j.value("N", o.N);
  if (j.contains("model")) o.model = traj_json::parse_model(j.at("model").get<std::string>());
  o.rotation_aware = j.value("rotation_aware", o.rotation_aware);
  o.velocity_init = j.value("velocity_init", o.velocity_init);
  o.grid_resolution = j.value("grid_resolution", o.grid_resolution);
  o.dual_seed = j.value("dual_seed", o.dual_seed);
  o.certificate_warm_start = j.value("certificate_warm_start", o.certificate_warm_start);
  o.swept_collision = j.value("swept_collision", o.swept_collision);
  o.clearance_margin = j.value("clearance_margin", o.clearance_margin);
  if (o.N < 2) throw Error(ErrorCode::InvalidArgument, "plan.N must be at least 2");
  if (!(o.grid_resolution > 0.0)) throw Error(ErrorCode::InvalidArgument, "plan.grid_resolution must be positive");
  if (o.clearance_margin < 0.0) throw Error(ErrorCode::InvalidArgument, "plan.clearance_margin must be nonnegative");
  return o;
}

inline json validation_options_to_json(const ValidationOptions& v) {
  return {{"subsamples", v.subsamples},
          {"distance_tol", v.distance_tol},
          {"defect_tol", v.defect_tol},
          {"residual_tol", v.residual_tol},
          {"bound_tol", v.bound_tol}};
}

inline ValidationOptions validation_options_from_json(const json& j) {
  ValidationOptions v;
  v.subsamples = j.value("subsamples", v.subsamples);
  v.distance_tol = j.value("distance_tol", v.distance_tol);
  v.defect_tol = j.value("defect_tol", v.defect_tol);
  v.residual_tol = j.value("residual_tol", v.residual_tol);
  v.bound_tol = j.value("bound_tol", v.bound_tol);
  if (v.subsamples < 1) throw Error(ErrorCode::InvalidArgument, "validation.subsamples must be at least 1");
  return v;
}

inline json run_config_to_json(const RunConfig& c) {
  return {{"params", params_to_json(c.params)},
          {"weights", weights_to_json(c.weights)},
          {"solver", solver_options_to_json(c.solver)},
          {"plan", plan_options_to_json(c.plan)},
          {"validation", validation_options_to_json(c.validation)}};
}

inline RunConfig run_config_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "config: expected a JSON object");
  RunConfig c;
  try {
    if (j.contains("params")) c.params = params_from_json(j.at("params"));
    if (j.contains("weights")) c.weights = weights_from_json(j.at("weights"));
    if (j.contains("solver")) c.solver = solver_options_from_json(j.at("solver"));
    if (j.contains("plan")) c.plan = plan_options_from_json(j.at("plan"));
    if (j.contains("validation")) c.validation = validation_options_from_json(j.at("validation"));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("config: ") + e.what());
  }
  return c;
}

inline RunConfig load_run_config(const std::string& path) { return run_config_from_json(read_json_file(path)); }

}  // namespace polyfly
