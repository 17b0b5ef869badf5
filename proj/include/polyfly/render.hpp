#pragma once

// Static SVG rendering of a trajectory in its environment: a top view (x-y)
// and a side view (x-z) placed side by side. Each view holds one polygon per
// obstacle, the payload and quadrotor paths, and the quadrotor, cable and
// payload footprints at every k-th knot. All coordinates are printed with a
// fixed precision so the output is byte-stable for fixed input.

#include <algorithm>
#include <array>
#include <cstdio>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "polyfly/environment.hpp"
#include "polyfly/errors.hpp"
#include "polyfly/flatness.hpp"
#include "polyfly/geometry.hpp"
#include "polyfly/trajectory.hpp"

namespace polyfly {

struct RenderOptions {
  int every = 5;             // footprint stride in knots; the final knot is always drawn
  double view_width = 480.0;  // pixels per view
  double padding = 20.0;
};

using Vec2 = Eigen::Vector2d;

/// Convex hull in counter-clockwise order (monotone chain). Collinear points
/// are dropped.
inline std::vector<Vec2> convex_hull_2d(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) { return (a - b).norm() < 1e-12; }),
            pts.end());
  if (pts.size() < 3) return pts;
  auto cross = [](const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const Vec2& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

/// Outline of a polytope projected along one world axis.
inline std::vector<Vec2> projected_outline(const HPolytope& P, int axis_u, int axis_v) {
  std::vector<Vec2> pts;
  for (const Vec3& v : vertex_enumeration(P)) pts.emplace_back(v(axis_u), v(axis_v));
  return convex_hull_2d(std::move(pts));
}

namespace render_detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  std::string s(buf);
  return s == "-0.00" ? "0.00" : s;
}

struct View {
  int u = 0;
  int v = 1;
  const char* id = "top";
  double x0 = 0.0;  // pixel offset of the view
  double scale = 1.0;
  double lo_u = 0.0, lo_v = 0.0, hi_v = 0.0;
  double padding = 0.0;

  double px(double a) const { return x0 + padding + (a - lo_u) * scale; }
  double py(double b) const { return padding + (hi_v - b) * scale; }

  std::string points(const std::vector<Vec2>& pts) const {
    std::string s;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i) s += ' ';
      s += fmt(px(pts[i].x())) + "," + fmt(py(pts[i].y()));
    }
    return s;
  }
};

}  // namespace render_detail

inline std::string render_svg(const Trajectory& traj, const Environment& env, const SystemParams& params,
                              const RenderOptions& opts = {}) {
  using render_detail::fmt;
  using render_detail::View;
  traj.check_dimensions();
  if (opts.every < 1) throw Error(ErrorCode::InvalidArgument, "footprint stride must be at least 1");
  if (!(opts.view_width > 0.0) || opts.padding < 0.0) throw Error(ErrorCode::InvalidArgument, "bad view geometry");

  const Vec3 lo = env.bounds_lo;
  const Vec3 hi = env.bounds_hi;
  const Vec3 span = (hi - lo).cwiseMax(1e-9);
  const double scale = opts.view_width / span.x();
  const double height_xy = span.y() * scale;
  const double height_xz = span.z() * scale;
  const double panel_h = std::max(height_xy, height_xz) + 2.0 * opts.padding;
  const double panel_w = opts.view_width + 2.0 * opts.padding;

  std::array<View, 2> views{};
  views[0] = {0, 1, "top", 0.0, scale, lo.x(), lo.y(), hi.y(), opts.padding};
  views[1] = {0, 2, "side", panel_w, scale, lo.x(), lo.z(), hi.z(), opts.padding};

  // Footprints: knots 0, every, 2*every, ... and always the final knot.
  std::vector<int> knots;
  for (int k = 0; k <= traj.N(); k += opts.every) knots.push_back(k);
  if (knots.back() != traj.N()) knots.push_back(traj.N());

  struct Footprint {
    int knot;
    std::array<HPolytope, 3> parts;
  };
  std::vector<Footprint> prints;
  std::vector<Vec3> quad_path;
  for (int k = 0; k <= traj.N(); ++k) {
    quad_path.push_back(flat_to_quad(traj.states[k], traj.input_at_knot(k), params).x_Q);
  }
  for (int k : knots) {
    const ComponentSet cs = component_set(traj.states[k], traj.input_at_knot(k), params);
    prints.push_back({k, {cs.quad, cs.cable, cs.payload}});
  }

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(2.0 * panel_w) + "\" height=\"" + fmt(panel_h) +
         "\" viewBox=\"0 0 " + fmt(2.0 * panel_w) + " " + fmt(panel_h) + "\">\n";
  out += "<title>" + env.name + "</title>\n";
  out += "<style>.obstacle{fill:#9a9a9a;stroke:#444;stroke-width:1}"
         ".bounds{fill:none;stroke:#000;stroke-dasharray:4 3}"
         ".payload-path{fill:none;stroke:#1f6fb4;stroke-width:1.5}"
         ".quad-path{fill:none;stroke:#c0392b;stroke-width:1.5}"
         ".quad{fill:#e74c3c;fill-opacity:0.35;stroke:#c0392b;stroke-width:0.6}"
         ".cable{fill:#333;stroke:#333;stroke-width:0.6}"
         ".payload{fill:#3498db;fill-opacity:0.45;stroke:#1f6fb4;stroke-width:0.6}"
         ".endpoint{stroke:#000;stroke-width:0.8}</style>\n";

  static const char* part_class[] = {"quad", "cable", "payload"};
  for (const View& view : views) {
    out += "<g class=\"view\" id=\"" + std::string(view.id) + "\">\n";
    const double bottom = view.padding + (view.hi_v - view.lo_v) * scale;
    out += "<rect class=\"bounds\" x=\"" + fmt(view.px(lo.x())) + "\" y=\"" + fmt(view.py(view.hi_v)) +
           "\" width=\"" + fmt(opts.view_width) + "\" height=\"" + fmt(bottom - view.padding) + "\"/>\n";
    for (int i = 0; i < env.num_obstacles(); ++i) {
      const auto outline = projected_outline(env.obstacles[i].poly, view.u, view.v);
      out += "<polygon class=\"obstacle\" data-index=\"" + std::to_string(i) + "\" points=\"" + view.points(outline) +
             "\"/>\n";
    }
    for (const Footprint& f : prints) {
      out += "<g class=\"footprint\" data-knot=\"" + std::to_string(f.knot) + "\">";
      for (int c = 0; c < 3; ++c) {
        out += "<polygon class=\"" + std::string(part_class[c]) + "\" points=\"" +
               view.points(projected_outline(f.parts[c], view.u, view.v)) + "\"/>";
      }
      out += "</g>\n";
    }
    auto polyline = [&](const char* cls, const std::vector<Vec3>& path) {
      std::vector<Vec2> pts;
      for (const Vec3& p : path) pts.emplace_back(p(view.u), p(view.v));
      out += "<polyline class=\"" + std::string(cls) + "\" points=\"" + view.points(pts) + "\"/>\n";
    };
    std::vector<Vec3> payload_path;
    for (const auto& s : traj.states) payload_path.push_back(s.x_L);
    polyline("payload-path", payload_path);
    polyline("quad-path", quad_path);
    for (const auto& [p, color] : {std::pair{env.start, "#2ecc71"}, std::pair{env.goal, "#f1c40f"}}) {
      out += "<circle class=\"endpoint\" cx=\"" + fmt(view.px(p(view.u))) + "\" cy=\"" + fmt(view.py(p(view.v))) +
             "\" r=\"4.00\" fill=\"" + color + "\"/>\n";
    }
    out += "</g>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace polyfly
