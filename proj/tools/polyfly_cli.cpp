// polyfly command-line front end.
//
// Exit codes: 0 success, 2 the plan or trajectory failed its checks,
// 3 usage, input or runtime error.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "polyfly/bench.hpp"
#include "polyfly/config.hpp"
#include "polyfly/environment.hpp"
#include "polyfly/nlp.hpp"
#include "polyfly/render.hpp"
#include "polyfly/scenarios.hpp"
#include "polyfly/validator.hpp"

namespace fs = std::filesystem;
using namespace polyfly;

namespace {

constexpr int kPass = 0;
constexpr int kFail = 2;
constexpr int kError = 3;

RunConfig config_or_default(const std::string& path) { return path.empty() ? RunConfig{} : load_run_config(path); }

CollisionModel parse_mode(const std::string& m) {
  if (m == "component" || m == "component-wise") return CollisionModel::ComponentWise;
  if (m == "single" || m == "single-polytope") return CollisionModel::SinglePolytope;
  throw Error(ErrorCode::InvalidArgument, "unknown mode '" + m + "' (expected component or single)");
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create directory " + dir + ": " + ec.message());
}

int cmd_plan(const std::string& env_path, const std::string& config_path, const std::string& mode,
             const std::string& out_dir, int every) {
  RunConfig cfg = config_or_default(config_path);
  if (!mode.empty()) cfg.plan.model = parse_mode(mode);
  const Environment env = load_environment(env_path, cfg.params);
  ensure_dir(out_dir);

  const PlanResult result = plan(env, cfg.params, cfg.weights, cfg.plan, cfg.solver);
  const ValidationReport val = validate(result.trajectory, env, cfg.params, cfg.weights, cfg.validation);
  const bool solved = result.report.status == SolveStatus::Solved;

  json report = plan_report_to_json(result);
  report["env"] = env.name;
  report["mode"] = traj_json::model_name(cfg.plan.model);
  report["validation"] = validation_to_json(val);
  report["pass"] = solved && val.pass;
  report["config"] = run_config_to_json(cfg);
  // Wall time varies between runs; keep the written files reproducible.
  report.erase("wall_time");

  json traj = trajectory_to_json(result.trajectory);
  traj["report"] = report;
  const fs::path dir(out_dir);
  write_text_file((dir / "trajectory.json").string(), dump_canonical(traj));
  write_text_file((dir / "report.json").string(), dump_canonical(report));
  RenderOptions ro;
  ro.every = every;
  write_text_file((dir / "render.svg").string(), render_svg(result.trajectory, env, cfg.params, ro));

  std::printf("%s: %s after %d iterations, T = %.3f s, validation %s%s%s\n", env.name.c_str(),
              to_string(result.report.status), result.report.iterations, result.trajectory.total_time(),
              val.pass ? "pass" : "fail", val.pass ? "" : ": ", val.failure.c_str());
  return solved && val.pass ? kPass : kFail;
}

int cmd_validate(const std::string& traj_path, const std::string& env_path, const std::string& config_path) {
  const RunConfig cfg = config_or_default(config_path);
  const Environment env = load_environment(env_path, cfg.params);
  const Trajectory traj = trajectory_from_json(read_json_file(traj_path));
  const ValidationReport val = validate(traj, env, cfg.params, cfg.weights, cfg.validation);
  std::cout << dump_canonical(validation_to_json(val));
  return val.pass ? kPass : kFail;
}

int cmd_render(const std::string& traj_path, const std::string& env_path, const std::string& config_path, int every,
               const std::string& out) {
  const RunConfig cfg = config_or_default(config_path);
  const Environment env = load_environment(env_path, cfg.params);
  const Trajectory traj = trajectory_from_json(read_json_file(traj_path));
  RenderOptions ro;
  ro.every = every;
  const std::string svg = render_svg(traj, env, cfg.params, ro);
  if (out.empty()) {
    std::cout << svg;
  } else {
    write_text_file(out, svg);
  }
  return kPass;
}

int cmd_bench(const std::string& suite, const std::string& axis_str, const std::string& config_path,
              const std::string& out_dir) {
  const RunConfig cfg = config_or_default(config_path);
  const BenchAxis axis = parse_axis(axis_str);
  const std::vector<Environment> envs = load_suite(suite, cfg.params);
  const BenchTable table = run_bench(envs, axis, cfg);
  const std::string text = bench_to_text(table);
  std::cout << text;
  if (!out_dir.empty()) {
    ensure_dir(out_dir);
    const fs::path dir(out_dir);
    const std::string stem = std::string("bench_") + axis_name(axis);
    write_text_file((dir / (stem + ".txt")).string(), text);
    write_text_file((dir / (stem + ".json")).string(), dump_canonical(bench_to_json(table)));
  }
  return kPass;
}

Environment generate(const std::string& kind, std::uint64_t seed, int obstacles, double gap,
                     const SystemParams& params) {
  if (kind == "maze") {
    MazeSpec spec;
    spec.num_obstacles = obstacles > 0 ? obstacles : 3 + static_cast<int>(seed % 4);
    return gen_maze(seed, spec, params);
  }
  if (kind == "gap") return gen_narrow_gap(gap, params);
  if (kind == "corridor") return make_corridor();
  if (kind == "ceiling") return make_low_ceiling(params);
  throw Error(ErrorCode::InvalidArgument, "unknown environment kind '" + kind + "'");
}

int cmd_gen_env(const std::string& kind, std::uint64_t seed, int obstacles, double gap, const std::string& out,
                const std::string& config_path) {
  const RunConfig cfg = config_or_default(config_path);
  const Environment env = generate(kind, seed, obstacles, gap, cfg.params);
  save_environment(env, out);
  std::printf("wrote %s (%d obstacles)\n", out.c_str(), env.num_obstacles());
  return kPass;
}

int cmd_gen_suite(const std::string& out_dir, const std::string& config_path) {
  const RunConfig cfg = config_or_default(config_path);
  ensure_dir(out_dir);
  for (const Environment& env : generated_suite(cfg.params)) {
    const std::string path = (fs::path(out_dir) / (env.name + ".json")).string();
    save_environment(env, path);
    std::printf("wrote %s\n", path.c_str());
  }
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimum-time planning for a quadrotor with a cable-suspended payload"};
  app.require_subcommand(1);

  std::string env_path, config_path, mode, out, traj_path, suite, axis, kind;
  int every = 5;
  std::uint64_t seed = 1;
  int obstacles = 0;
  double gap = 0.14;

  auto* plan_cmd = app.add_subcommand("plan", "Plan a trajectory and write trajectory.json, report.json, render.svg");
  plan_cmd->add_option("--env", env_path, "Environment JSON")->required();
  plan_cmd->add_option("--config", config_path, "Run configuration JSON");
  plan_cmd->add_option("--mode", mode, "Collision model: component or single");
  plan_cmd->add_option("--out", out, "Output directory")->required();
  plan_cmd->add_option("--every", every, "Footprint stride of the rendered SVG")->check(CLI::PositiveNumber);

  auto* validate_cmd = app.add_subcommand("validate", "Check a trajectory against an environment");
  validate_cmd->add_option("--traj", traj_path, "Trajectory JSON")->required();
  validate_cmd->add_option("--env", env_path, "Environment JSON")->required();
  validate_cmd->add_option("--config", config_path, "Run configuration JSON");

  auto* render_cmd = app.add_subcommand("render", "Render a trajectory to SVG");
  render_cmd->add_option("--traj", traj_path, "Trajectory JSON")->required();
  render_cmd->add_option("--env", env_path, "Environment JSON")->required();
  render_cmd->add_option("--every", every, "Footprint stride in knots")->check(CLI::PositiveNumber);
  render_cmd->add_option("--config", config_path, "Run configuration JSON");
  render_cmd->add_option("--out", out, "Output file (default: stdout)");

  auto* bench_cmd = app.add_subcommand("bench", "Run an ablation over a directory of environments");
  bench_cmd->add_option("--suite", suite, "Directory of environment JSON files")->required();
  bench_cmd->add_option("--axis", axis, "alpha_g, velinit or mode")->required();
  bench_cmd->add_option("--config", config_path, "Run configuration JSON");
  bench_cmd->add_option("--out", out, "Directory for bench_<axis>.txt and bench_<axis>.json");

  auto* gen_cmd = app.add_subcommand("gen-env", "Generate an environment");
  gen_cmd->add_option("--kind", kind, "maze, gap, corridor or ceiling")->required();
  gen_cmd->add_option("--seed", seed, "Generator seed (maze)");
  gen_cmd->add_option("--obstacles", obstacles, "Obstacle count (maze; default 3 + seed mod 4)");
  gen_cmd->add_option("--gap", gap, "Slot width in meters (gap)");
  gen_cmd->add_option("--out", out, "Output file")->required();
  gen_cmd->add_option("--config", config_path, "Run configuration JSON (system parameters)");

  auto* suite_cmd = app.add_subcommand("gen-suite", "Write the eight-environment benchmark suite");
  suite_cmd->add_option("--out", out, "Output directory")->required();
  suite_cmd->add_option("--config", config_path, "Run configuration JSON (system parameters)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kError;
  }

  try {
    if (*plan_cmd) return cmd_plan(env_path, config_path, mode, out, every);
    if (*validate_cmd) return cmd_validate(traj_path, env_path, config_path);
    if (*render_cmd) return cmd_render(traj_path, env_path, config_path, every, out);
    if (*bench_cmd) return cmd_bench(suite, axis, config_path, out);
    if (*gen_cmd) return cmd_gen_env(kind, seed, obstacles, gap, out, config_path);
    if (*suite_cmd) return cmd_gen_suite(out, config_path);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kError;
  }
  return kError;
}
