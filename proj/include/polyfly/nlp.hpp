#pragma once

// Direct transcription of the minimum-time planning problem.
//
// Decision vector layout (the index map is part of the trajectory format):
//   [ states   9(N+1) ]  knot k at 9k: x_L(3), v_L(3), a_L(3)
//   [ inputs   3N     ]  interval k at 9(N+1) + 3k: jerk
//   [ durations N     ]  interval k at 12N + 9 + k
//   [ duals           ]  stage-major, then component, then obstacle; each
//                        block is lambda_M (obstacle faces) then lambda_N (6)
//   [ slacks  2 per (stage, component, obstacle) ]  solver-internal only
//   [ sweep slacks, one per body vertex for stages 0..N-1 ]  when swept
//
// Constraint rows:
//   [ dynamics 9N ][ boundary 24 ][ 5 per (stage, component, obstacle) ]
//   [ sweep rows, one per body vertex for stages 0..N-1 ]  when swept
// The per-triple rows are: margin - beta - s1 = 0, body-frame stationarity (3),
// and 1 - |A_M^T lambda_M|^2 - s2 = 0, with s1, s2 >= 0. A sweep row asks the
// plane w = A_M^T lambda_M of stage k to clear body vertex v posed at knot k+1:
// w.(O + R v) - lambda_M.b_M - beta - s = 0. Beta inside the planner is the
// environment clearance plus the planning margin.
//
// Collision constraints at knot k use the input of interval min(k, N-1).

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "polyfly/autodiff.hpp"
#include "polyfly/environment.hpp"
#include "polyfly/errors.hpp"
#include "polyfly/flatness.hpp"
#include "polyfly/geometry.hpp"
#include "polyfly/initializer.hpp"
#include "polyfly/solver.hpp"
#include "polyfly/trajectory.hpp"

namespace polyfly {

// ---------------------------------------------------------------------------
// Cost terms

inline double cost_time(const std::vector<double>& durations, double alpha_to) {
  if (durations.empty()) return 0.0;
  double s = 0.0;
  for (double dt : durations) s += dt;
  return alpha_to / static_cast<double>(durations.size()) * s;
}

inline double cost_input_rate(const std::vector<FlatInput>& inputs, double alpha_u) {
  if (inputs.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t k = 1; k < inputs.size(); ++k) s += (inputs[k].j_L - inputs[k - 1].j_L).squaredNorm();
  return alpha_u / static_cast<double>(inputs.size()) * s;
}

/// Interior knots only; positions only.
inline double cost_guess_proximity(const std::vector<FlatState>& states, const std::vector<Vec3>& guess,
                                   double alpha_g) {
  if (states.size() != guess.size()) {
    throw Error(ErrorCode::DimensionMismatch, "guess must have one position per knot");
  }
  const int N = static_cast<int>(states.size()) - 1;
  if (N < 2) return 0.0;
  double s = 0.0;
  for (int k = 1; k < N; ++k) s += (states[k].x_L - guess[k]).squaredNorm();
  return alpha_g / static_cast<double>(N - 1) * s;
}

inline double cost_dt_smoothness(const std::vector<double>& durations, double alpha_td) {
  if (durations.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < durations.size(); ++k) {
    const double d = durations[k + 1] - durations[k];
    s += d * d;
  }
  return alpha_td / static_cast<double>(durations.size()) * s;
}

struct CostBreakdown {
  double time = 0.0;
  double input_rate = 0.0;
  double guess_proximity = 0.0;
  double dt_smoothness = 0.0;

  double total() const { return time + input_rate + guess_proximity + dt_smoothness; }
};

inline CostBreakdown cost_terms(const Trajectory& z, const std::vector<Vec3>& guess, const Weights& w) {
  z.check_dimensions();
  return {cost_time(z.durations, w.alpha_to), cost_input_rate(z.inputs, w.alpha_u),
          cost_guess_proximity(z.states, guess, w.alpha_g), cost_dt_smoothness(z.durations, w.alpha_td)};
}

inline double cost_total(const Trajectory& z, const std::vector<Vec3>& guess, const Weights& w) {
  return cost_terms(z, guess, w).total();
}

// ---------------------------------------------------------------------------
// Constraint residuals on a trajectory

inline std::vector<StateVec> dynamics_defects(const Trajectory& z) {
  z.check_dimensions();
  std::vector<StateVec> d;
  d.reserve(z.N());
  for (int k = 0; k < z.N(); ++k) {
    d.push_back(z.states[k + 1].stacked() - rk4_step<double>(z.states[k].stacked(), z.inputs[k].j_L, z.durations[k]));
  }
  return d;
}

/// Start/goal position, rest velocity and acceleration at both ends, and zero
/// jerk on the first and last interval (24 entries).
inline Eigen::Matrix<double, 24, 1> boundary_constraints(const Trajectory& z, const Environment& env) {
  z.check_dimensions();
  const FlatState& s0 = z.states.front();
  const FlatState& sN = z.states.back();
  Eigen::Matrix<double, 24, 1> r;
  r << s0.x_L - env.start, sN.x_L - env.goal, s0.v_L, sN.v_L, s0.a_L, sN.a_L, z.inputs.front().j_L,
      z.inputs.back().j_L;
  return r;
}

struct CollisionResidual {
  int stage = 0;
  int component = 0;
  int obstacle = 0;
  double margin = 0.0;           // dual lower bound on the separation
  double margin_residual = 0.0;  // beta - margin, feasible when <= 0
  Vec3 stationarity = Vec3::Zero();
  double neg_violation = 0.0;
  double norm_residual = 0.0;  // |A_M^T lambda_M| - 1, feasible when <= 0
  // beta minus the clearance of the same plane from the body at the next knot.
  double sweep_residual = -std::numeric_limits<double>::infinity();

  double violation() const {
    return std::max(
        {margin_residual, stationarity.cwiseAbs().maxCoeff(), neg_violation, norm_residual, sweep_residual, 0.0});
  }
};

struct CollisionResiduals {
  std::vector<CollisionResidual> entries;

  double max_violation() const {
    double v = 0.0;
    for (const auto& e : entries) v = std::max(v, e.violation());
    return v;
  }
};

/// Residuals of the collision rows with clearance `env.beta`. With `swept`
/// the stage-k plane is also checked against the body at knot k+1.
inline CollisionResiduals collision_constraints(const Trajectory& z, const Environment& env,
                                                const SystemParams& params, bool rotation_aware = true,
                                                bool swept = false) {
  z.check_dimensions();
  const auto comps = model_components(z.model);
  const int K = static_cast<int>(comps.size());
  if (z.num_obstacles != env.num_obstacles() ||
      z.duals.size() != static_cast<std::size_t>(z.N() + 1) * K * env.num_obstacles()) {
    throw Error(ErrorCode::DimensionMismatch, "trajectory duals do not match the environment");
  }
  CollisionResiduals out;
  std::vector<PoseT<double>> poses;
  for (int k = 0; k <= z.N(); ++k) {
    for (int c = 0; c < K; ++c) {
      poses.push_back(component_pose<double>(comps[c], z.states[k].x_L, z.states[k].a_L, z.input_at_knot(k).j_L,
                                             params, rotation_aware));
    }
  }
  for (int k = 0; k <= z.N(); ++k) {
    for (int c = 0; c < K; ++c) {
      const auto& pose = poses[k * K + c];
      const HPolytope body = component_body_polytope(comps[c], params);
      const auto verts = vertex_enumeration(body);
      for (int i = 0; i < env.num_obstacles(); ++i) {
        const HPolytope& M = env.obstacles[i].poly;
        const DualPair& d = z.duals[z.dual_index(k, c, i)];
        if (d.lambda_M.size() != M.num_faces() || d.lambda_N.size() != body.num_faces()) {
          throw Error(ErrorCode::DimensionMismatch, "dual block size does not match polytope faces");
        }
        const Vec3 w = M.A().transpose() * d.lambda_M;
        CollisionResidual r;
        r.stage = k;
        r.component = c;
        r.obstacle = i;
        r.margin = -d.lambda_N.dot(body.b()) - d.lambda_M.dot(M.b()) + w.dot(pose.O);
        r.margin_residual = env.beta - r.margin;
        r.stationarity = body.A().transpose() * d.lambda_N + pose.R.transpose() * w;
        r.neg_violation = std::max(0.0, -std::min(d.lambda_M.minCoeff(), d.lambda_N.minCoeff()));
        r.norm_residual = w.norm() - 1.0;
        if (swept && k < z.N()) {
          const auto& next = poses[(k + 1) * K + c];
          double clear = std::numeric_limits<double>::infinity();
          for (const Vec3& v : verts) clear = std::min(clear, w.dot(next.O + next.R * v) - d.lambda_M.dot(M.b()));
          r.sweep_residual = env.beta - clear;
        }
        out.entries.push_back(r);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// NLP

class TrajectoryProblem : public NlpProblem {
 public:
  static constexpr int kBoundaryRows = 24;
  static constexpr int kRowsPerTriple = 5;
  // Dynamics and boundary rows are weighted so the solver's feasibility
  // tolerance translates into a tighter tolerance on those groups.
  static constexpr double kDynamicsScale = 10.0;
  static constexpr double kBoundaryScale = 10.0;

  TrajectoryProblem(Environment env, SystemParams params, Weights weights, PlanOptions opts,
                    std::vector<Vec3> guess_positions)
      : env_(std::move(env)),
        params_(params),
        w_(weights),
        opts_(opts),
        guess_(std::move(guess_positions)),
        comps_(model_components(opts.model)) {
    w_.validate();
    params_.validate();
    if (opts_.N < 2) throw Error(ErrorCode::InvalidArgument, "N must be at least 2");
    if (static_cast<int>(guess_.size()) != opts_.N + 1) {
      throw Error(ErrorCode::DimensionMismatch, "guess must have N+1 positions");
    }
    N_ = opts_.N;
    K_ = static_cast<int>(comps_.size());
    NO_ = env_.num_obstacles();
    for (Component c : comps_) {
      bodies_.push_back(component_body_polytope(c, params_));
      body_verts_.push_back(vertex_enumeration(bodies_.back()));
    }
    beta_ = env_.beta + opts_.clearance_margin;
    in_off_ = 9 * (N_ + 1);
    dt_off_ = in_off_ + 3 * N_;
    Eigen::Index off = dt_off_ + N_;
    for (int k = 0; k <= N_; ++k) {
      for (int c = 0; c < K_; ++c) {
        for (int i = 0; i < NO_; ++i) {
          dual_off_.push_back(off);
          off += env_.obstacles[i].poly.num_faces() + bodies_[c].num_faces();
        }
      }
    }
    slack_off_ = off;
    off += 2 * num_triples();
    coll_row_ = 9 * N_ + kBoundaryRows;
    Eigen::Index row = coll_row_ + kRowsPerTriple * num_triples();
    for (int t = 0; t < num_sweep_triples(); ++t) {
      const auto nv = static_cast<Eigen::Index>(body_verts_[(t / NO_) % K_].size());
      sweep_slack_off_.push_back(off);
      sweep_row_off_.push_back(row);
      off += nv;
      row += nv;
    }
    n_ = off;
    m_ = row;
    build_bounds();
    stage_jets_.resize(static_cast<std::size_t>(N_ + 1) * K_);
    dyn_hess_.resize(N_);
  }

  Eigen::Index num_variables() const override { return n_; }
  Eigen::Index num_constraints() const override { return m_; }
  const Eigen::VectorXd& lower_bounds() const override { return lo_; }
  const Eigen::VectorXd& upper_bounds() const override { return hi_; }

  int num_triples() const { return (N_ + 1) * K_ * NO_; }
  /// Triples of stages 0..N-1, which carry sweep rows when enabled.
  int num_sweep_triples() const { return opts_.swept_collision ? N_ * K_ * NO_ : 0; }
  int triple(int k, int c, int i) const { return (k * K_ + c) * NO_ + i; }
  Eigen::Index state_index(int k, int i) const { return 9 * k + i; }
  Eigen::Index input_index(int k, int i) const { return in_off_ + 3 * k + i; }
  Eigen::Index duration_index(int k) const { return dt_off_ + k; }
  Eigen::Index dual_offset(int t) const { return dual_off_[t]; }
  Eigen::Index slack_index(int t) const { return slack_off_ + 2 * t; }
  /// Length of the exported decision vector (everything but the slacks).
  Eigen::Index decision_size() const { return slack_off_; }
  Eigen::Index collision_row(int t) const { return coll_row_ + kRowsPerTriple * t; }

  const Environment& environment() const { return env_; }
  const std::vector<Vec3>& guess() const { return guess_; }

  Trajectory unpack(const Eigen::VectorXd& x) const {
    Trajectory t;
    t.env_name = env_.name;
    t.model = opts_.model;
    t.num_obstacles = NO_;
    for (int k = 0; k <= N_; ++k) t.states.push_back(FlatState::from_stacked(x.segment<9>(9 * k)));
    for (int k = 0; k < N_; ++k) t.inputs.push_back({x.segment<3>(input_index(k, 0))});
    for (int k = 0; k < N_; ++k) t.durations.push_back(x(duration_index(k)));
    for (int tr = 0; tr < num_triples(); ++tr) {
      const int m = env_.obstacles[tr % NO_].poly.num_faces();
      const int nf = bodies_[(tr / NO_) % K_].num_faces();
      t.duals.push_back({x.segment(dual_off_[tr], m), x.segment(dual_off_[tr] + m, nf)});
    }
    return t;
  }

  /// Packs a trajectory; slacks are set to the constraint surplus (clipped at 0).
  Eigen::VectorXd pack(const Trajectory& t) {
    t.check_dimensions();
    if (t.N() != N_ || t.num_obstacles != NO_ || t.model != opts_.model ||
        t.duals.size() != static_cast<std::size_t>(num_triples())) {
      throw Error(ErrorCode::DimensionMismatch, "trajectory does not match the problem layout");
    }
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n_);
    for (int k = 0; k <= N_; ++k) x.segment<9>(9 * k) = t.states[k].stacked();
    for (int k = 0; k < N_; ++k) x.segment<3>(input_index(k, 0)) = t.inputs[k].j_L;
    for (int k = 0; k < N_; ++k) x(duration_index(k)) = t.durations[k];
    for (int tr = 0; tr < num_triples(); ++tr) {
      const DualPair& d = t.duals[tr];
      x.segment(dual_off_[tr], d.lambda_M.size()) = d.lambda_M;
      x.segment(dual_off_[tr] + d.lambda_M.size(), d.lambda_N.size()) = d.lambda_N;
    }
    try {
      Eigen::VectorXd c(m_);
      eval_collision<false>(x, c, nullptr);
      for (int tr = 0; tr < num_triples(); ++tr) {
        x(slack_index(tr)) = std::max(0.0, c(collision_row(tr)));
        x(slack_index(tr) + 1) = std::max(0.0, c(collision_row(tr) + 4));
      }
      for (int tr = 0; tr < num_sweep_triples(); ++tr) {
        const auto nv = static_cast<Eigen::Index>(body_verts_[(tr / NO_) % K_].size());
        for (Eigen::Index v = 0; v < nv; ++v) {
          x(sweep_slack_off_[tr] + v) = std::max(0.0, c(sweep_row_off_[tr] + v));
        }
      }
    } catch (const Error&) {
      // Leave slacks at zero when the seed sits on a flatness singularity.
    }
    return x;
  }

  /// Objective only, through the same cost term functions used for diagnostics.
  double objective(const Eigen::VectorXd& x) const {
    std::vector<FlatState> states;
    std::vector<FlatInput> inputs;
    std::vector<double> durations;
    states.reserve(N_ + 1);
    for (int k = 0; k <= N_; ++k) states.push_back(FlatState::from_stacked(x.segment<9>(9 * k)));
    for (int k = 0; k < N_; ++k) inputs.push_back({x.segment<3>(input_index(k, 0))});
    for (int k = 0; k < N_; ++k) durations.push_back(x(duration_index(k)));
    return cost_time(durations, w_.alpha_to) + cost_input_rate(inputs, w_.alpha_u) +
           cost_guess_proximity(states, guess_, w_.alpha_g) + cost_dt_smoothness(durations, w_.alpha_td);
  }

  Eigen::VectorXd objective_gradient(const Eigen::VectorXd& x) const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n_);
    const double cu = 2.0 * w_.alpha_u / N_;
    for (int k = 1; k < N_; ++k) {
      const Vec3 d = x.segment<3>(input_index(k, 0)) - x.segment<3>(input_index(k - 1, 0));
      g.segment<3>(input_index(k, 0)) += cu * d;
      g.segment<3>(input_index(k - 1, 0)) -= cu * d;
    }
    const double cg = 2.0 * w_.alpha_g / (N_ - 1);
    for (int k = 1; k < N_; ++k) g.segment<3>(state_index(k, 0)) += cg * (x.segment<3>(state_index(k, 0)) - guess_[k]);
    const double ct = 2.0 * w_.alpha_td / N_;
    for (int k = 0; k < N_; ++k) {
      g(duration_index(k)) += w_.alpha_to / N_;
      if (k + 1 < N_) {
        const double d = x(duration_index(k + 1)) - x(duration_index(k));
        g(duration_index(k + 1)) += ct * d;
        g(duration_index(k)) -= ct * d;
      }
    }
    return g;
  }

  bool evaluate_values(const Eigen::VectorXd& x, double& f, Eigen::VectorXd& c) override {
    try {
      f = objective(x);
      c.resize(m_);
      eval_dynamics(x, c, nullptr);
      eval_boundary(x, c, nullptr);
      eval_collision<false>(x, c, nullptr);
    } catch (const Error&) {
      return false;
    }
    return std::isfinite(f) && c.allFinite();
  }

  bool evaluate_derivatives(const Eigen::VectorXd& x, NlpEvaluation& out) override {
    Triplets jac;
    jac.reserve(static_cast<std::size_t>(m_) * 12);
    try {
      out.objective = objective(x);
      out.gradient = objective_gradient(x);
      out.constraints.resize(m_);
      eval_dynamics(x, out.constraints, &jac);
      eval_boundary(x, out.constraints, &jac);
      eval_collision<true>(x, out.constraints, &jac);
    } catch (const Error&) {
      return false;
    }
    out.jacobian.resize(m_, n_);
    out.jacobian.setFromTriplets(jac.begin(), jac.end());
    last_x_ = x;
    return std::isfinite(out.objective) && out.constraints.allFinite();
  }

  void hessian(double obj_factor, const Eigen::VectorXd& y, Triplets& out) override {
    const Eigen::VectorXd& x = last_x_;
    // Objective (constant).
    const double cu = 2.0 * w_.alpha_u / N_ * obj_factor;
    for (int k = 1; k < N_; ++k) {
      for (int a = 0; a < 3; ++a) {
        const Eigen::Index i = input_index(k, a);
        const Eigen::Index j = input_index(k - 1, a);
        out.emplace_back(i, i, cu);
        out.emplace_back(j, j, cu);
        out.emplace_back(i, j, -cu);
        out.emplace_back(j, i, -cu);
      }
    }
    const double cg = 2.0 * w_.alpha_g / (N_ - 1) * obj_factor;
    for (int k = 1; k < N_; ++k) {
      for (int a = 0; a < 3; ++a) out.emplace_back(state_index(k, a), state_index(k, a), cg);
    }
    const double ct = 2.0 * w_.alpha_td / N_ * obj_factor;
    for (int k = 0; k + 1 < N_; ++k) {
      const Eigen::Index i = duration_index(k);
      const Eigen::Index j = duration_index(k + 1);
      out.emplace_back(i, i, ct);
      out.emplace_back(j, j, ct);
      out.emplace_back(i, j, -ct);
      out.emplace_back(j, i, -ct);
    }
    // Dynamics.
    for (int k = 0; k < N_; ++k) {
      Eigen::Matrix<double, 13, 13> H = Eigen::Matrix<double, 13, 13>::Zero();
      for (int r = 0; r < 9; ++r) H -= kDynamicsScale * y(9 * k + r) * dyn_hess_[k][r];
      const auto idx = dynamics_vars(k);
      for (int p = 0; p < 13; ++p) {
        for (int q = 0; q < 13; ++q) {
          if (H(p, q) != 0.0) out.emplace_back(idx[p], idx[q], H(p, q));
        }
      }
    }
    // Collision.
    for (int k = 0; k <= N_; ++k) {
      const auto zi = stage_vars(k);
      for (int c = 0; c < K_; ++c) {
        const StageJet& J = stage_jets_[k * K_ + c];
        for (int i = 0; i < NO_; ++i) {
          const int t = triple(k, c, i);
          const HPolytope& M = env_.obstacles[i].poly;
          const int m = M.num_faces();
          const Eigen::Index lm = dual_off_[t];
          const Eigen::VectorXd lamM = x.segment(lm, m);
          const Vec3 w = M.A().transpose() * lamM;
          const Eigen::Index row = collision_row(t);
          const double mu_m = y(row);
          const Vec3 mu_s = y.segment<3>(row + 1);
          const double mu_n = y(row + 4);

          Eigen::Matrix<double, 9, 9> Hzz = Eigen::Matrix<double, 9, 9>::Zero();
          Eigen::Matrix<double, 3, 9> V = mu_m * J.dO;
          for (int a = 0; a < 3; ++a) {
            Hzz += (mu_m * w(a)) * J.hO[a];
            for (int r = 0; r < 3; ++r) {
              const double coef = mu_s(r) * w(a);
              if (coef != 0.0) Hzz += coef * J.hR[3 * a + r];
              V.row(a) += mu_s(r) * J.dR.row(3 * a + r);
            }
          }
          for (int p = 0; p < 9; ++p) {
            for (int q = 0; q < 9; ++q) {
              if (Hzz(p, q) != 0.0) out.emplace_back(zi[p], zi[q], Hzz(p, q));
            }
          }
          const Eigen::MatrixXd cross = M.A() * V;  // m x 9
          for (int f = 0; f < m; ++f) {
            for (int p = 0; p < 9; ++p) {
              const double v = cross(f, p);
              if (v != 0.0) {
                out.emplace_back(lm + f, zi[p], v);
                out.emplace_back(zi[p], lm + f, v);
              }
            }
          }
          if (mu_n != 0.0) {
            const Eigen::MatrixXd G = (-2.0 * mu_n) * (M.A() * M.A().transpose());
            for (int f = 0; f < m; ++f) {
              for (int g = 0; g < m; ++g) out.emplace_back(lm + f, lm + g, G(f, g));
            }
          }
        }
      }
    }
    // Sweep rows are linear in each vertex, so their multipliers can be summed
    // into one weight and one weighted vertex per triple.
    for (int t = 0; t < num_sweep_triples(); ++t) {
      const int k = t / (K_ * NO_);
      const int c = (t / NO_) % K_;
      const int i = t % NO_;
      const auto zn = stage_vars(k + 1);
      const StageJet& J = stage_jets_[(k + 1) * K_ + c];
      const auto& verts = body_verts_[c];
      double mu_sum = 0.0;
      Vec3 mv = Vec3::Zero();
      for (std::size_t v = 0; v < verts.size(); ++v) {
        const double mu = y(sweep_row_off_[t] + static_cast<Eigen::Index>(v));
        mu_sum += mu;
        mv += mu * verts[v];
      }
      if (mu_sum == 0.0 && mv.isZero()) continue;
      const HPolytope& M = env_.obstacles[i].poly;
      const int m = M.num_faces();
      const Eigen::Index lm = dual_off_[triple(k, c, i)];
      const Vec3 w = M.A().transpose() * x.segment(lm, m);
      Eigen::Matrix<double, 3, 9> D = mu_sum * J.dO;
      Eigen::Matrix<double, 9, 9> Hzz = Eigen::Matrix<double, 9, 9>::Zero();
      for (int a = 0; a < 3; ++a) {
        Hzz += (mu_sum * w(a)) * J.hO[a];
        for (int r = 0; r < 3; ++r) {
          D.row(a) += mv(r) * J.dR.row(3 * a + r);
          const double coef = mv(r) * w(a);
          if (coef != 0.0) Hzz += coef * J.hR[3 * a + r];
        }
      }
      for (int p = 0; p < 9; ++p) {
        for (int q = 0; q < 9; ++q) {
          if (Hzz(p, q) != 0.0) out.emplace_back(zn[p], zn[q], Hzz(p, q));
        }
      }
      const Eigen::MatrixXd cross = M.A() * D;
      for (int f = 0; f < m; ++f) {
        for (int p = 0; p < 9; ++p) {
          const double v = cross(f, p);
          if (v != 0.0) {
            out.emplace_back(lm + f, zn[p], v);
            out.emplace_back(zn[p], lm + f, v);
          }
        }
      }
    }
  }

 private:
  struct StageJet {
    Vec3 O = Vec3::Zero();
    Mat3 R = Mat3::Identity();
    Eigen::Matrix<double, 3, 9> dO = Eigen::Matrix<double, 3, 9>::Zero();
    Eigen::Matrix<double, 9, 9> dR = Eigen::Matrix<double, 9, 9>::Zero();  // row 3a + r holds R(a, r)
    std::array<Eigen::Matrix<double, 9, 9>, 3> hO{};
    std::array<Eigen::Matrix<double, 9, 9>, 9> hR{};
  };

  void build_bounds() {
    lo_ = Eigen::VectorXd::Zero(n_);
    hi_ = Eigen::VectorXd::Constant(n_, std::numeric_limits<double>::infinity());
    const auto [slo, shi] = w_.state_bounds(env_);
    for (int k = 0; k <= N_; ++k) {
      lo_.segment<9>(9 * k) = slo;
      hi_.segment<9>(9 * k) = shi;
    }
    for (int k = 0; k < N_; ++k) {
      lo_.segment<3>(input_index(k, 0)) = w_.u_lo;
      hi_.segment<3>(input_index(k, 0)) = w_.u_hi;
      lo_(duration_index(k)) = w_.dt_min;
      hi_(duration_index(k)) = w_.dt_max;
    }
  }

  std::array<Eigen::Index, 9> stage_vars(int k) const {
    const int ku = std::min(k, N_ - 1);
    return {state_index(k, 0), state_index(k, 1), state_index(k, 2), state_index(k, 6), state_index(k, 7),
            state_index(k, 8), input_index(ku, 0), input_index(ku, 1), input_index(ku, 2)};
  }

  std::array<Eigen::Index, 13> dynamics_vars(int k) const {
    std::array<Eigen::Index, 13> idx{};
    for (int i = 0; i < 9; ++i) idx[i] = state_index(k, i);
    for (int i = 0; i < 3; ++i) idx[9 + i] = input_index(k, i);
    idx[12] = duration_index(k);
    return idx;
  }

  void eval_dynamics(const Eigen::VectorXd& x, Eigen::VectorXd& c, Triplets* jac) {
    using J13 = ad::Jet2<13>;
    for (int k = 0; k < N_; ++k) {
      const Eigen::Index row = 9 * k;
      if (!jac) {
        const StateVec next = rk4_step<double>(x.segment<9>(9 * k), x.segment<3>(input_index(k, 0)), x(duration_index(k)));
        c.segment<9>(row) = kDynamicsScale * (x.segment<9>(9 * (k + 1)) - next);
        continue;
      }
      const auto idx = dynamics_vars(k);
      Eigen::Matrix<J13, 9, 1> s;
      Vec3T<J13> j;
      for (int i = 0; i < 9; ++i) s(i) = ad::jet2_variable<13>(x(idx[i]), i);
      for (int i = 0; i < 3; ++i) j(i) = ad::jet2_variable<13>(x(idx[9 + i]), 9 + i);
      const J13 dt = ad::jet2_variable<13>(x(idx[12]), 12);
      const Eigen::Matrix<J13, 9, 1> next = rk4_step<J13>(s, j, dt);
      for (int r = 0; r < 9; ++r) {
        c(row + r) = kDynamicsScale * (x(9 * (k + 1) + r) - next(r).a.a);
        jac->emplace_back(row + r, 9 * (k + 1) + r, kDynamicsScale);
        for (int p = 0; p < 13; ++p) {
          const double v = ad::jet2_grad<13>(next(r), p);
          if (v != 0.0) jac->emplace_back(row + r, idx[p], -kDynamicsScale * v);
        }
        auto& H = dyn_hess_[k][r];
        for (int p = 0; p < 13; ++p) {
          for (int q = 0; q < 13; ++q) H(p, q) = ad::jet2_hess<13>(next(r), p, q);
        }
      }
    }
  }

  void eval_boundary(const Eigen::VectorXd& x, Eigen::VectorXd& c, Triplets* jac) const {
    const Eigen::Index row0 = 9 * N_;
    // (row offset, first variable index, target)
    const std::array<std::pair<Eigen::Index, Vec3>, 8> blocks = {{
        {state_index(0, 0), env_.start},
        {state_index(N_, 0), env_.goal},
        {state_index(0, 3), Vec3::Zero()},
        {state_index(N_, 3), Vec3::Zero()},
        {state_index(0, 6), Vec3::Zero()},
        {state_index(N_, 6), Vec3::Zero()},
        {input_index(0, 0), Vec3::Zero()},
        {input_index(N_ - 1, 0), Vec3::Zero()},
    }};
    for (int b = 0; b < 8; ++b) {
      for (int a = 0; a < 3; ++a) {
        const Eigen::Index row = row0 + 3 * b + a;
        const Eigen::Index var = blocks[b].first + a;
        c(row) = kBoundaryScale * (x(var) - blocks[b].second(a));
        if (jac) jac->emplace_back(row, var, kBoundaryScale);
      }
    }
  }

  template <bool kDerivatives>
  void eval_collision(const Eigen::VectorXd& x, Eigen::VectorXd& c, Triplets* jac) {
    using J9 = ad::Jet2<9>;
    std::vector<Vec3> Os(static_cast<std::size_t>(N_ + 1) * K_);
    std::vector<Mat3> Rs(Os.size());
    for (int k = 0; k <= N_; ++k) {
      const auto zi = stage_vars(k);
      for (int cc = 0; cc < K_; ++cc) {
        const std::size_t sc = static_cast<std::size_t>(k) * K_ + cc;
        if constexpr (kDerivatives) {
          StageJet J;
          Vec3T<J9> xl;
          Vec3T<J9> al;
          Vec3T<J9> jl;
          for (int a = 0; a < 3; ++a) {
            xl(a) = ad::jet2_variable<9>(x(zi[a]), a);
            al(a) = ad::jet2_variable<9>(x(zi[3 + a]), 3 + a);
            jl(a) = ad::jet2_variable<9>(x(zi[6 + a]), 6 + a);
          }
          const auto pose = component_pose<J9>(comps_[cc], xl, al, jl, params_, opts_.rotation_aware);
          for (int a = 0; a < 3; ++a) {
            J.O(a) = pose.O(a).a.a;
            for (int p = 0; p < 9; ++p) {
              J.dO(a, p) = ad::jet2_grad<9>(pose.O(a), p);
              for (int q = 0; q < 9; ++q) J.hO[a](p, q) = ad::jet2_hess<9>(pose.O(a), p, q);
            }
            for (int r = 0; r < 3; ++r) {
              const J9& e = pose.R(a, r);
              J.R(a, r) = e.a.a;
              for (int p = 0; p < 9; ++p) {
                J.dR(3 * a + r, p) = ad::jet2_grad<9>(e, p);
                for (int q = 0; q < 9; ++q) J.hR[3 * a + r](p, q) = ad::jet2_hess<9>(e, p, q);
              }
            }
          }
          stage_jets_[sc] = J;
          Os[sc] = J.O;
          Rs[sc] = J.R;
        } else {
          const auto pose = component_pose<double>(comps_[cc], Vec3(x.segment<3>(zi[0])),
                                                   Vec3(x(zi[3]), x(zi[4]), x(zi[5])),
                                                   Vec3(x(zi[6]), x(zi[7]), x(zi[8])), params_, opts_.rotation_aware);
          Os[sc] = pose.O;
          Rs[sc] = pose.R;
        }
      }
    }

    for (int k = 0; k <= N_; ++k) {
      const auto zi = stage_vars(k);
      for (int cc = 0; cc < K_; ++cc) {
        const std::size_t sc = static_cast<std::size_t>(k) * K_ + cc;
        const Vec3& O = Os[sc];
        const Mat3& R = Rs[sc];
        const HPolytope& body = bodies_[cc];
        const int nf = body.num_faces();
        for (int i = 0; i < NO_; ++i) {
          const int t = triple(k, cc, i);
          const HPolytope& M = env_.obstacles[i].poly;
          const int m = M.num_faces();
          const Eigen::Index lm = dual_off_[t];
          const Eigen::Index ln = lm + m;
          const Eigen::Index s1 = slack_index(t);
          const auto lamM = x.segment(lm, m);
          const auto lamN = x.segment(ln, nf);
          const Vec3 w = M.A().transpose() * lamM;
          const Eigen::Index row = collision_row(t);

          c(row) = -lamN.dot(body.b()) - lamM.dot(M.b()) + w.dot(O) - beta_ - x(s1);
          const Vec3 stat = body.A().transpose() * lamN + R.transpose() * w;
          c.segment<3>(row + 1) = stat;
          c(row + 4) = 1.0 - w.squaredNorm() - x(s1 + 1);

          if constexpr (kDerivatives) {
            const StageJet& J = stage_jets_[sc];
            const Eigen::VectorXd AMO = M.A() * O;
            for (int f = 0; f < m; ++f) jac->emplace_back(row, lm + f, -M.b()(f) + AMO(f));
            for (int f = 0; f < nf; ++f) jac->emplace_back(row, ln + f, -body.b()(f));
            const Eigen::Matrix<double, 1, 9> dmz = w.transpose() * J.dO;
            for (int p = 0; p < 9; ++p) {
              if (dmz(p) != 0.0) jac->emplace_back(row, zi[p], dmz(p));
            }
            jac->emplace_back(row, s1, -1.0);

            const Eigen::MatrixXd AMR = M.A() * R;  // m x 3
            for (int r = 0; r < 3; ++r) {
              for (int f = 0; f < nf; ++f) {
                const double v = body.A()(f, r);
                if (v != 0.0) jac->emplace_back(row + 1 + r, ln + f, v);
              }
              for (int f = 0; f < m; ++f) {
                if (AMR(f, r) != 0.0) jac->emplace_back(row + 1 + r, lm + f, AMR(f, r));
              }
              for (int p = 0; p < 9; ++p) {
                double v = 0.0;
                for (int a = 0; a < 3; ++a) v += w(a) * J.dR(3 * a + r, p);
                if (v != 0.0) jac->emplace_back(row + 1 + r, zi[p], v);
              }
            }

            const Eigen::VectorXd AMw = M.A() * w;
            for (int f = 0; f < m; ++f) jac->emplace_back(row + 4, lm + f, -2.0 * AMw(f));
            jac->emplace_back(row + 4, s1 + 1, -1.0);
          }
        }
      }
    }

    for (int t = 0; t < num_sweep_triples(); ++t) {
      const int k = t / (K_ * NO_);
      const int cc = (t / NO_) % K_;
      const int i = t % NO_;
      const std::size_t sc = static_cast<std::size_t>(k + 1) * K_ + cc;
      const HPolytope& M = env_.obstacles[i].poly;
      const int m = M.num_faces();
      const Eigen::Index lm = dual_off_[triple(k, cc, i)];
      const auto lamM = x.segment(lm, m);
      const Vec3 w = M.A().transpose() * lamM;
      const double offset = lamM.dot(M.b()) + beta_;
      const auto& verts = body_verts_[cc];
      for (std::size_t v = 0; v < verts.size(); ++v) {
        const Eigen::Index row = sweep_row_off_[t] + static_cast<Eigen::Index>(v);
        const Eigen::Index sv = sweep_slack_off_[t] + static_cast<Eigen::Index>(v);
        const Vec3 P = Os[sc] + Rs[sc] * verts[v];
        c(row) = w.dot(P) - offset - x(sv);
        if constexpr (kDerivatives) {
          const StageJet& J = stage_jets_[sc];
          const auto zn = stage_vars(k + 1);
          for (int f = 0; f < m; ++f) jac->emplace_back(row, lm + f, M.A().row(f).dot(P) - M.b()(f));
          Eigen::Matrix<double, 3, 9> dP = J.dO;
          for (int a = 0; a < 3; ++a) {
            for (int r = 0; r < 3; ++r) dP.row(a) += verts[v](r) * J.dR.row(3 * a + r);
          }
          const Eigen::Matrix<double, 1, 9> g = w.transpose() * dP;
          for (int p = 0; p < 9; ++p) {
            if (g(p) != 0.0) jac->emplace_back(row, zn[p], g(p));
          }
          jac->emplace_back(row, sv, -1.0);
        }
      }
    }
  }

  Environment env_;
  SystemParams params_;
  Weights w_;
  PlanOptions opts_;
  std::vector<Vec3> guess_;
  std::vector<Component> comps_;
  std::vector<HPolytope> bodies_;
  std::vector<std::vector<Vec3>> body_verts_;
  double beta_ = 0.0;
  int N_ = 0;
  int K_ = 0;
  int NO_ = 0;
  Eigen::Index in_off_ = 0;
  Eigen::Index dt_off_ = 0;
  Eigen::Index slack_off_ = 0;
  Eigen::Index coll_row_ = 0;
  Eigen::Index n_ = 0;
  Eigen::Index m_ = 0;
  std::vector<Eigen::Index> dual_off_;
  std::vector<Eigen::Index> sweep_slack_off_;
  std::vector<Eigen::Index> sweep_row_off_;
  Eigen::VectorXd lo_;
  Eigen::VectorXd hi_;
  Eigen::VectorXd last_x_;
  std::vector<StageJet> stage_jets_;
  std::vector<std::array<Eigen::Matrix<double, 13, 13>, 9>> dyn_hess_;
};

// ---------------------------------------------------------------------------
// Solve

struct GroupViolations {
  double dynamics = 0.0;
  double boundary = 0.0;
  double collision = 0.0;
  double bounds = 0.0;
};

struct PlanResult {
  Trajectory trajectory;
  SolveReport report;
  GroupViolations violations;
  // Smallest dual lower bound over all (stage, component, obstacle) triples,
  // evaluated on the world-frame polytopes.
  double certificate_margin_min = std::numeric_limits<double>::infinity();
  double certificate_residual_max = 0.0;
};

inline GroupViolations group_violations(const Trajectory& t, const Environment& env, const SystemParams& params,
                                        const Weights& w, bool rotation_aware, bool swept = false) {
  GroupViolations g;
  for (const auto& d : dynamics_defects(t)) g.dynamics = std::max(g.dynamics, d.cwiseAbs().maxCoeff());
  g.boundary = boundary_constraints(t, env).cwiseAbs().maxCoeff();
  if (env.num_obstacles() > 0) {
    g.collision = collision_constraints(t, env, params, rotation_aware, swept).max_violation();
  }
  const auto [lo, hi] = w.state_bounds(env);
  for (const auto& s : t.states) {
    const StateVec v = s.stacked();
    g.bounds = std::max({g.bounds, (lo - v).maxCoeff(), (v - hi).maxCoeff()});
  }
  for (const auto& u : t.inputs) {
    g.bounds = std::max({g.bounds, (w.u_lo - u.j_L).maxCoeff(), (u.j_L - w.u_hi).maxCoeff()});
  }
  for (double dt : t.durations) g.bounds = std::max({g.bounds, w.dt_min - dt, dt - w.dt_max});
  return g;
}

/// Overwrites the duals of every separated (stage, component, obstacle) triple
/// with the certificate of its maximal dual bound. Returns how many were set.
inline int warm_start_duals(Trajectory& t, const Environment& env, const SystemParams& params,
                            bool rotation_aware = true) {
  t.check_dimensions();
  const auto comps = model_components(t.model);
  int count = 0;
  for (int k = 0; k <= t.N(); ++k) {
    for (int c = 0; c < static_cast<int>(comps.size()); ++c) {
      HPolytope P = component_body_polytope(comps[c], params);
      try {
        P = component_polytope(comps[c], t.states[k], t.input_at_knot(k), params, rotation_aware);
      } catch (const Error&) {
        continue;
      }
      for (int i = 0; i < env.num_obstacles(); ++i) {
        try {
          t.duals[t.dual_index(k, c, i)] = max_dual_bound(env.obstacles[i].poly, P).second;
          ++count;
        } catch (const Error&) {
        }
      }
    }
  }
  return count;
}

/// Solves from `guess`; its positions also anchor the guess-proximity cost.
inline PlanResult solve(const Environment& env, const SystemParams& params, const Weights& weights,
                        const PlanOptions& opts, const Trajectory& guess, const SolverOptions& solver_opts = {}) {
  std::vector<Vec3> anchor;
  for (const auto& s : guess.states) anchor.push_back(s.x_L);
  PlanOptions o = opts;
  o.N = guess.N();
  TrajectoryProblem problem(env, params, weights, o, anchor);
  Trajectory start = guess;
  if (opts.certificate_warm_start) warm_start_duals(start, env, params, opts.rotation_aware);
  const Eigen::VectorXd x0 = problem.pack(start);

  InteriorPointSolver solver(solver_opts);
  const SolveResult sol = solver.solve(problem, x0);

  PlanResult out;
  out.report = sol.report;
  out.trajectory = problem.unpack(sol.x);
  try {
    out.violations = group_violations(out.trajectory, env, params, weights, opts.rotation_aware, opts.swept_collision);
    const auto comps = model_components(o.model);
    for (int k = 0; k <= o.N; ++k) {
      const FlatState& s = out.trajectory.states[k];
      const FlatInput& u = out.trajectory.input_at_knot(k);
      for (int c = 0; c < static_cast<int>(comps.size()); ++c) {
        const HPolytope P = component_polytope(comps[c], s, u, params, opts.rotation_aware);
        for (int i = 0; i < env.num_obstacles(); ++i) {
          const DualPair& d = out.trajectory.duals[out.trajectory.dual_index(k, c, i)];
          const HPolytope& M = env.obstacles[i].poly;
          const double margin = -d.lambda_N.dot(P.b()) - d.lambda_M.dot(M.b());
          out.certificate_margin_min = std::min(out.certificate_margin_min, margin);
          out.certificate_residual_max = std::max(out.certificate_residual_max, dual_residuals(M, P, d).max());
        }
      }
    }
  } catch (const Error&) {
    out.violations.dynamics = std::numeric_limits<double>::infinity();
  }
  return out;
}

/// Seeds with the grid search and solves.
inline PlanResult plan(const Environment& env, const SystemParams& params, const Weights& weights,
                       const PlanOptions& opts, const SolverOptions& solver_opts = {}) {
  const Trajectory seed = seed_all(env, params, weights, opts);
  return solve(env, params, weights, opts, seed, solver_opts);
}

inline json solve_report_to_json(const SolveReport& r) {
  auto finite = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  return {{"status", to_string(r.status)},
          {"iterations", r.iterations},
          {"outer_iterations", r.outer_iterations},
          {"kkt_residual", finite(r.kkt_residual)},
          {"constraint_violation", finite(r.constraint_violation)},
          {"objective", finite(r.objective)},
          {"final_barrier", r.final_barrier},
          {"wall_time", r.wall_time}};
}

/// Solver report plus per-group violations and the certificate summary.
inline json plan_report_to_json(const PlanResult& r) {
  auto finite = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  json j = solve_report_to_json(r.report);
  j["total_time"] = r.trajectory.total_time();
  j["violations"] = {{"dynamics", finite(r.violations.dynamics)},
                     {"boundary", finite(r.violations.boundary)},
                     {"collision", finite(r.violations.collision)},
                     {"bounds", finite(r.violations.bounds)}};
  j["certificate_margin_min"] = finite(r.certificate_margin_min);
  j["certificate_residual_max"] = finite(r.certificate_residual_max);
  return j;
}

}  // namespace polyfly
