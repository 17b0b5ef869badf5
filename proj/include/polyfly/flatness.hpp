#pragma once

// Payload flat-output dynamics (triple integrator with per-stage duration) and
// the differential-flatness reconstruction of cable, quadrotor translation, and
// attitude. The core maps are templated on the scalar so the planner can
// differentiate them with polyfly::ad.

#include <cmath>

#include <Eigen/Dense>

#include "polyfly/autodiff.hpp"
#include "polyfly/errors.hpp"
#include "polyfly/geometry.hpp"

namespace polyfly {

template <typename T>
using Vec3T = Eigen::Matrix<T, 3, 1>;
template <typename T>
using Mat3T = Eigen::Matrix<T, 3, 3>;

struct FlatState {
  Vec3 x_L = Vec3::Zero();
  Vec3 v_L = Vec3::Zero();
  Vec3 a_L = Vec3::Zero();

  Eigen::Matrix<double, 9, 1> stacked() const {
    Eigen::Matrix<double, 9, 1> s;
    s << x_L, v_L, a_L;
    return s;
  }
  static FlatState from_stacked(const Eigen::Matrix<double, 9, 1>& s) {
    return {s.segment<3>(0), s.segment<3>(3), s.segment<3>(6)};
  }
};

struct FlatInput {
  Vec3 j_L = Vec3::Zero();
};

struct SystemParams {
  double m_Q = 1.0;
  double m_L = 0.2;
  double l = 1.0;
  double g = 9.81;
  Vec3 quad_half_extents{0.25, 0.25, 0.05};
  Vec3 payload_half_extents{0.08, 0.08, 0.08};
  double cable_halfwidth = 0.01;
  double eps_taut = 1e-3;

  void validate() const {
    if (!(m_Q > 0 && m_L > 0 && l > 0 && g > 0 && cable_halfwidth > 0 && eps_taut > 0) ||
        !(quad_half_extents.array() > 0).all() || !(payload_half_extents.array() > 0).all()) {
      throw Error(ErrorCode::InvalidArgument, "system masses, lengths and extents must be positive");
    }
  }
};

struct QuadState {
  Vec3 x_Q = Vec3::Zero();
  Vec3 v_Q = Vec3::Zero();
  Vec3 a_Q = Vec3::Zero();
  Mat3 R_Q = Mat3::Identity();
  Vec3 q_cable = -Vec3::UnitZ();
  Vec3 qdot_cable = Vec3::Zero();
  Vec3 qddot_cable = Vec3::Zero();
  Vec3 thrust = Vec3::Zero();  // f R_Q e3
};

/// One RK4 step of d/dt [x, v, a] = [v, a, j] with j held constant.
template <typename T>
Eigen::Matrix<T, 9, 1> rk4_step(const Eigen::Matrix<T, 9, 1>& x, const Vec3T<T>& j, const T& dt) {
  const auto f = [&j](const Eigen::Matrix<T, 9, 1>& s) {
    Eigen::Matrix<T, 9, 1> ds;
    ds << s.template segment<3>(3), s.template segment<3>(6), j;
    return ds;
  };
  const T half = dt * 0.5;
  const Eigen::Matrix<T, 9, 1> k1 = f(x);
  const Eigen::Matrix<T, 9, 1> k2 = f(x + k1 * half);
  const Eigen::Matrix<T, 9, 1> k3 = f(x + k2 * half);
  const Eigen::Matrix<T, 9, 1> k4 = f(x + k3 * dt);
  return x + (k1 + k2 * T(2.0) + k3 * T(2.0) + k4) * (dt / 6.0);
}

inline FlatState rk4_step(const FlatState& x, const FlatInput& u, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::NonPositiveDt, "integration step must be positive");
  return FlatState::from_stacked(rk4_step<double>(x.stacked(), u.j_L, dt));
}

/// Constant-jerk closed form, used as the integration oracle and for sub-sampling.
inline FlatState constant_jerk_flow(const FlatState& x, const FlatInput& u, double t) {
  FlatState y;
  y.x_L = x.x_L + x.v_L * t + x.a_L * (t * t / 2.0) + u.j_L * (t * t * t / 6.0);
  y.v_L = x.v_L + x.a_L * t + u.j_L * (t * t / 2.0);
  y.a_L = x.a_L + u.j_L * t;
  return y;
}

namespace flat_detail {

template <typename T>
T norm3(const Vec3T<T>& v) {
  using std::sqrt;
  return sqrt(v.squaredNorm());
}

}  // namespace flat_detail

template <typename T>
Vec3T<T> cable_direction(const Vec3T<T>& a_L, const SystemParams& p) {
  Vec3T<T> s = a_L;
  s(2) = s(2) + p.g;
  const T n = flat_detail::norm3(s);
  if (ad::value_of(n) < p.eps_taut) {
    throw Error(ErrorCode::FreefallSingularity, "payload acceleration too close to free fall; cable would go slack");
  }
  return -s / n;
}

/// Rotation whose third column is F/|F| with zero yaw about the world x axis.
template <typename T>
Mat3T<T> attitude_from_thrust(const Vec3T<T>& F, double yaw = 0.0) {
  const T nF = flat_detail::norm3(F);
  if (!(ad::value_of(nF) > 0.0)) throw Error(ErrorCode::DegenerateAttitude, "zero thrust vector");
  const Vec3T<T> b3 = F / nF;
  const Vec3T<T> c1(T(std::cos(yaw)), T(std::sin(yaw)), T(0.0));
  const Vec3T<T> b2_raw = b3.cross(c1);
  const T n2 = flat_detail::norm3(b2_raw);
  if (ad::value_of(n2) < 1e-6) {
    throw Error(ErrorCode::DegenerateAttitude, "thrust direction parallel to the yaw reference axis");
  }
  const Vec3T<T> b2 = b2_raw / n2;
  const Vec3T<T> b1 = b2.cross(b3);
  Mat3T<T> R;
  R.col(0) = b1;
  R.col(1) = b2;
  R.col(2) = b3;
  return R;
}

/// Cable direction, its first two derivatives and the thrust vector. The
/// thrust follows the payload equation of motion with the quadrotor aligned to
/// the cable; the cable acceleration then follows from the quadrotor equation.
template <typename T>
struct CableKinematics {
  Vec3T<T> q;
  Vec3T<T> qdot;
  Vec3T<T> qddot;
  Vec3T<T> F;
};

template <typename T>
CableKinematics<T> cable_kinematics(const Vec3T<T>& a_L, const Vec3T<T>& j_L, const SystemParams& p) {
  CableKinematics<T> k;
  k.q = cable_direction<T>(a_L, p);
  Vec3T<T> s = a_L;
  s(2) = s(2) + p.g;
  const T n = flat_detail::norm3(s);
  k.qdot = -(j_L - k.q * k.q.dot(j_L)) / n;
  const T qdot_sq = k.qdot.squaredNorm();
  k.F = s * (p.m_Q + p.m_L) + k.q * (p.m_Q * p.l * qdot_sq);
  k.qddot = k.q.cross(k.q.cross(k.F)) / (p.m_Q * p.l) - k.q * qdot_sq;
  return k;
}

inline QuadState flat_to_quad(const FlatState& x, const FlatInput& u, const SystemParams& p) {
  const auto k = cable_kinematics<double>(x.a_L, u.j_L, p);
  QuadState qs;
  qs.q_cable = k.q;
  qs.qdot_cable = k.qdot;
  qs.qddot_cable = k.qddot;
  qs.thrust = k.F;
  qs.x_Q = x.x_L - p.l * k.q;
  qs.v_Q = x.v_L - p.l * k.qdot;
  qs.a_Q = x.a_L - p.l * k.qddot;
  qs.R_Q = attitude_from_thrust<double>(k.F);
  return qs;
}

inline Vec3 cable_direction(const Vec3& a_L, const SystemParams& p) { return cable_direction<double>(a_L, p); }

inline Mat3 attitude_from_thrust(const Vec3& F, double yaw = 0.0) { return attitude_from_thrust<double>(F, yaw); }

}  // namespace polyfly
