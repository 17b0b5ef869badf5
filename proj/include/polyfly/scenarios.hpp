#pragma once

// Scenario generators: a two-wall corridor, a wall with a slot narrower than
// the quadrotor and payload, a low ceiling, and seeded obstacle courses.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "polyfly/environment.hpp"
#include "polyfly/errors.hpp"
#include "polyfly/initializer.hpp"

namespace polyfly {

/// Two staggered full-height walls that force a slalom in y.
inline Environment make_corridor() {
  Environment env;
  env.name = "corridor";
  env.beta = 0.05;
  env.bounds_lo = Vec3(-1.0, -2.0, 0.0);
  env.bounds_hi = Vec3(7.0, 2.0, 4.0);
  env.start = Vec3(0.0, 0.0, 1.0);
  env.goal = Vec3(6.0, 0.0, 1.0);
  env.obstacles.push_back(Obstacle::from_box({Vec3(0.3, 1.0, 2.0), Vec3(2.0, -1.0, 2.0), Vec3::Zero()}));
  env.obstacles.push_back(Obstacle::from_box({Vec3(0.3, 1.0, 2.0), Vec3(4.0, 1.0, 2.0), Vec3::Zero()}));
  return env;
}

/// A thin wall across the flight direction occupying only the altitude band
/// of the cable, split by a vertical slot of `gap_width`. The payload passes
/// underneath, the quadrotor above and the cable through the slot. Payload
/// altitude bounds leave no way around the wall.
inline Environment gen_narrow_gap(double gap_width, const SystemParams& params = {}, double beta = 0.05) {
  if (!(gap_width > 2.0 * params.cable_halfwidth)) {
    throw Error(ErrorCode::InfeasibleSpec, "slot must be wider than the cable");
  }
  constexpr double z0 = 1.0;
  constexpr double slack = 0.05;
  constexpr double wall_x = 2.0;
  constexpr double wall_half_x = 0.05;
  constexpr double reach = 4.0;
  const double bottom = z0 + params.payload_half_extents.z() + beta + slack;
  const double top = z0 + params.l - params.quad_half_extents.z() - beta - slack;
  if (!(top > bottom)) throw Error(ErrorCode::InfeasibleSpec, "cable too short for a wall between quad and payload");

  Environment env;
  env.name = "narrow-gap";
  env.beta = beta;
  env.bounds_lo = Vec3(-1.0, -1.0, z0 - 0.1);
  env.bounds_hi = Vec3(5.0, 1.0, z0 + 0.1);
  env.start = Vec3(0.0, 0.0, z0);
  env.goal = Vec3(4.0, 0.0, z0);
  const double half_z = (top - bottom) / 2.0;
  const double center_z = (top + bottom) / 2.0;
  const double half_y = reach / 2.0;
  for (double side : {-1.0, 1.0}) {
    const double cy = side * (gap_width / 2.0 + half_y);
    env.obstacles.push_back(
        Obstacle::from_box({Vec3(wall_half_x, half_y, half_z), Vec3(wall_x, cy, center_z), Vec3::Zero()}));
  }
  return env;
}

/// A ceiling slab just above the hover height of the quadrotor.
inline Environment make_low_ceiling(const SystemParams& params = {}, double beta = 0.05) {
  constexpr double z0 = 1.0;
  constexpr double slack = 0.01;
  Environment env;
  env.name = "low-ceiling";
  env.beta = beta;
  const double ceiling = z0 + params.l + params.quad_half_extents.z() + beta + slack;
  env.bounds_lo = Vec3(-1.0, -1.0, 0.3);
  env.bounds_hi = Vec3(6.0, 1.0, z0 + 0.05);
  env.start = Vec3(0.0, 0.0, z0);
  env.goal = Vec3(5.0, 0.0, z0);
  env.obstacles.push_back(
      Obstacle::from_box({Vec3(5.0, 3.0, 0.25), Vec3(2.5, 0.0, ceiling + 0.25), Vec3::Zero()}));
  return env;
}

struct MazeSpec {
  int num_obstacles = 5;
  double length = 8.0;  // start-to-goal distance along x
  double width = 4.0;   // extent of the bounds in y
  double height = 3.0;  // obstacle height from the floor
  int max_attempts = 50;
};

namespace scenario_detail {

/// Uniform double in [lo, hi) from the top 53 bits; identical on every platform.
inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

}  // namespace scenario_detail

/// Seeded obstacle course of walls (entered from either side) and rotated
/// pillars. Draws are repeated until the conservative grid search finds a
/// path; the same seed always yields the same environment.
inline Environment gen_maze(std::uint64_t seed, const MazeSpec& spec = {}, const SystemParams& params = {},
                            double beta = 0.05) {
  using scenario_detail::uniform;
  if (spec.num_obstacles < 1 || !(spec.length > 0.0) || !(spec.width > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "maze needs obstacles and positive extents");
  }
  std::mt19937_64 rng(seed);
  const double half_w = spec.width / 2.0;
  for (int attempt = 0; attempt < spec.max_attempts; ++attempt) {
    Environment env;
    env.name = "maze-" + std::to_string(seed);
    env.beta = beta;
    env.bounds_lo = Vec3(-1.0, -half_w, 0.4);
    env.bounds_hi = Vec3(spec.length + 1.0, half_w, 1.6);
    env.start = Vec3(0.0, 0.0, 1.0);
    env.goal = Vec3(spec.length, uniform(rng, -0.3, 0.3) * half_w, 1.0);
    const double spacing = spec.length / (spec.num_obstacles + 1);
    for (int i = 0; i < spec.num_obstacles; ++i) {
      const double x = spacing * (i + 1) + uniform(rng, -0.15, 0.15) * spacing;
      const double hz = spec.height / 2.0;
      if (uniform(rng, 0.0, 1.0) < 0.6) {
        // Wall attached to one side of the bounds, leaving an opening on the other.
        const double side = uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;
        const double cover = uniform(rng, 0.45, 0.7) * spec.width;
        const double thick = uniform(rng, 0.1, 0.25);
        const double hy = (cover + 1.0) / 2.0;
        const double cy = side * (half_w + 1.0 - hy);
        const double yaw = uniform(rng, -0.3, 0.3);
        env.obstacles.push_back(Obstacle::from_box({Vec3(thick, hy, hz), Vec3(x, cy, hz), Vec3(0.0, 0.0, yaw)}));
      } else {
        const Vec3 half(uniform(rng, 0.15, 0.4), uniform(rng, 0.15, 0.4), hz);
        const Vec3 center(x, uniform(rng, -0.5, 0.5) * half_w, hz);
        env.obstacles.push_back(Obstacle::from_box({half, center, Vec3(0.0, 0.0, uniform(rng, -0.8, 0.8))}));
      }
    }
    try {
      validate_environment(env, params);
      astar_seed(env, params, 0.1);
      return env;
    } catch (const Error&) {
    }
  }
  throw Error(ErrorCode::InfeasibleSpec, "no passable obstacle course within the attempt budget");
}

/// Eight generated environments: seven obstacle courses and one slot.
inline std::vector<Environment> generated_suite(const SystemParams& params = {}) {
  std::vector<Environment> suite;
  for (std::uint64_t seed = 1; seed <= 7; ++seed) {
    MazeSpec spec;
    spec.num_obstacles = 3 + static_cast<int>(seed % 4);
    suite.push_back(gen_maze(seed, spec, params));
  }
  Environment gap = gen_narrow_gap(0.14, params);
  gap.name = "narrow-gap-0.14";
  suite.push_back(gap);
  return suite;
}

}  // namespace polyfly
