#pragma once

// Ablation benchmark: plans every environment of a suite under each setting
// of one axis (guess-proximity weight, velocity seeding, or collision model)
// and summarizes failures, iterations and trajectory times per setting.
// Runs execute on a small thread pool; rows are stored by (env, setting)
// index so the tables do not depend on scheduling.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "polyfly/config.hpp"
#include "polyfly/environment.hpp"
#include "polyfly/errors.hpp"
#include "polyfly/nlp.hpp"
#include "polyfly/validator.hpp"

namespace polyfly {

enum class BenchAxis { AlphaG, VelocityInit, Mode };

inline const char* axis_name(BenchAxis a) {
  switch (a) {
    case BenchAxis::AlphaG: return "alpha_g";
    case BenchAxis::VelocityInit: return "velinit";
    case BenchAxis::Mode: return "mode";
  }
  return "?";
}

inline BenchAxis parse_axis(const std::string& s) {
  if (s == "alpha_g") return BenchAxis::AlphaG;
  if (s == "velinit") return BenchAxis::VelocityInit;
  if (s == "mode") return BenchAxis::Mode;
  throw Error(ErrorCode::InvalidArgument, "unknown bench axis '" + s + "' (expected alpha_g, velinit or mode)");
}

/// One point on an ablation axis: a label and how it edits the base config.
struct BenchSetting {
  std::string label;
  std::function<void(RunConfig&)> apply;
};

inline BenchSetting alpha_g_setting(double alpha_g) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "alpha_g=%g", alpha_g);
  return {buf, [alpha_g](RunConfig& c) { c.weights.alpha_g = alpha_g; }};
}

inline std::vector<BenchSetting> axis_settings(BenchAxis axis) {
  switch (axis) {
    case BenchAxis::AlphaG: return {alpha_g_setting(0.0), alpha_g_setting(1.0), alpha_g_setting(5.0)};
    case BenchAxis::VelocityInit:
      return {{"velinit=on", [](RunConfig& c) { c.plan.velocity_init = true; }},
              {"velinit=off", [](RunConfig& c) { c.plan.velocity_init = false; }}};
    case BenchAxis::Mode:
      return {{"component-wise", [](RunConfig& c) { c.plan.model = CollisionModel::ComponentWise; }},
              {"single-polytope", [](RunConfig& c) { c.plan.model = CollisionModel::SinglePolytope; }}};
  }
  return {};
}

struct BenchRow {
  std::string env;
  std::string setting;
  std::string status;  // solver status, or the error code when planning threw
  bool valid = false;
  double trajectory_time = 0.0;
  double path_length = 0.0;
  int iterations = 0;
  double wall_time = 0.0;

  bool success() const { return status == "Solved" && valid; }
};

struct BenchSummary {
  std::string setting;
  int runs = 0;
  int failures = 0;
  double mean_iterations = 0.0;
  double mean_trajectory_time = 0.0;  // over successful runs; 0 when none succeeded
};

struct BenchTable {
  std::string axis;
  std::vector<std::string> envs;
  std::vector<std::string> settings;
  std::vector<BenchRow> rows;  // env-major: rows[e * settings + s]

  const BenchRow& at(std::size_t e, std::size_t s) const { return rows[e * settings.size() + s]; }

  std::vector<BenchSummary> summary() const {
    std::vector<BenchSummary> out;
    for (std::size_t s = 0; s < settings.size(); ++s) {
      BenchSummary sum;
      sum.setting = settings[s];
      double iters = 0.0, time = 0.0;
      for (std::size_t e = 0; e < envs.size(); ++e) {
        const BenchRow& r = at(e, s);
        ++sum.runs;
        iters += r.iterations;
        if (r.success()) {
          time += r.trajectory_time;
        } else {
          ++sum.failures;
        }
      }
      if (sum.runs > 0) sum.mean_iterations = iters / sum.runs;
      const int ok = sum.runs - sum.failures;
      if (ok > 0) sum.mean_trajectory_time = time / ok;
      out.push_back(sum);
    }
    return out;
  }

  BenchSummary summary_for(const std::string& setting) const {
    for (const auto& s : summary()) {
      if (s.setting == setting) return s;
    }
    throw Error(ErrorCode::InvalidArgument, "no bench setting '" + setting + "'");
  }
};

/// Worker count: POLYFLY_THREADS if set and positive, else the hardware count.
inline int bench_thread_count(int jobs) {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("POLYFLY_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) n = v;
  }
  return std::clamp(n, 1, std::max(jobs, 1));
}

inline BenchRow bench_run(const Environment& env, const RunConfig& cfg, const std::string& setting) {
  BenchRow row;
  row.env = env.name;
  row.setting = setting;
  try {
    const PlanResult r = plan(env, cfg.params, cfg.weights, cfg.plan, cfg.solver);
    row.status = to_string(r.report.status);
    row.iterations = r.report.iterations;
    row.wall_time = r.report.wall_time;
    const ValidationReport v = validate(r.trajectory, env, cfg.params, cfg.weights, cfg.validation);
    row.valid = v.pass;
    row.trajectory_time = v.total_time;
    row.path_length = v.path_length;
  } catch (const Error& e) {
    row.status = std::string(to_string(e.code()));
  } catch (const std::exception&) {
    row.status = "Error";
  }
  return row;
}

inline BenchTable run_bench(const std::vector<Environment>& envs, const std::string& axis,
                            const std::vector<BenchSetting>& settings, const RunConfig& base, int threads = 0) {
  if (envs.empty()) throw Error(ErrorCode::InvalidArgument, "bench suite is empty");
  BenchTable table;
  table.axis = axis;
  for (const auto& e : envs) table.envs.push_back(e.name);
  for (const auto& s : settings) table.settings.push_back(s.label);
  const std::size_t jobs = envs.size() * settings.size();
  table.rows.resize(jobs);

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t j = next++; j < jobs; j = next++) {
      const std::size_t e = j / settings.size();
      const std::size_t s = j % settings.size();
      RunConfig cfg = base;
      settings[s].apply(cfg);
      table.rows[j] = bench_run(envs[e], cfg, settings[s].label);
    }
  };
  const int n = threads > 0 ? std::min<int>(threads, static_cast<int>(jobs)) : bench_thread_count(static_cast<int>(jobs));
  std::vector<std::thread> pool;
  for (int i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return table;
}

inline BenchTable run_bench(const std::vector<Environment>& envs, BenchAxis axis, const RunConfig& base,
                            int threads = 0) {
  return run_bench(envs, axis_name(axis), axis_settings(axis), base, threads);
}

/// Environments of a suite directory: every *.json file, in file-name order.
inline std::vector<Environment> load_suite(const std::string& dir, const SystemParams& params = {}) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(ErrorCode::IoError, "suite directory not found: " + dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Environment> envs;
  for (const auto& f : files) envs.push_back(load_environment(f.string(), params));
  if (envs.empty()) throw Error(ErrorCode::InvalidArgument, "no environment files in " + dir);
  return envs;
}

/// Deterministic JSON: wall-clock times are left out.
inline json bench_to_json(const BenchTable& t) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    rows.push_back({{"env", r.env},
                    {"setting", r.setting},
                    {"status", r.status},
                    {"valid", r.valid},
                    {"success", r.success()},
                    {"iterations", r.iterations},
                    {"trajectory_time", r.trajectory_time},
                    {"path_length", r.path_length}});
  }
  json summary = json::array();
  for (const auto& s : t.summary()) {
    summary.push_back({{"setting", s.setting},
                       {"runs", s.runs},
                       {"failures", s.failures},
                       {"mean_iterations", s.mean_iterations},
                       {"mean_trajectory_time", s.mean_trajectory_time}});
  }
  return {{"axis", t.axis}, {"envs", t.envs}, {"settings", t.settings}, {"rows", rows}, {"summary", summary}};
}

/// Plain-text table: one line per environment, one column group per setting.
inline std::string bench_to_text(const BenchTable& t) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "axis: %s\n", t.axis.c_str());
  out += buf;
  for (std::size_t s = 0; s < t.settings.size(); ++s) {
    std::snprintf(buf, sizeof(buf), "\n[%s]\n%-20s %-12s %5s %8s %8s %6s\n", t.settings[s].c_str(), "env", "status",
                  "valid", "time[s]", "path[m]", "iters");
    out += buf;
    for (std::size_t e = 0; e < t.envs.size(); ++e) {
      const BenchRow& r = t.at(e, s);
      std::snprintf(buf, sizeof(buf), "%-20s %-12s %5s %8.3f %8.3f %6d\n", r.env.c_str(), r.status.c_str(),
                    r.valid ? "yes" : "no", r.trajectory_time, r.path_length, r.iterations);
      out += buf;
    }
  }
  out += "\nsummary\n";
  std::snprintf(buf, sizeof(buf), "%-20s %5s %9s %11s %12s\n", "setting", "runs", "failures", "mean iters",
                "mean time[s]");
  out += buf;
  for (const auto& s : t.summary()) {
    std::snprintf(buf, sizeof(buf), "%-20s %5d %9d %11.1f %12.3f\n", s.setting.c_str(), s.runs, s.failures,
                  s.mean_iterations, s.mean_trajectory_time);
    out += buf;
  }
  return out;
}

}  // namespace polyfly
