#pragma once

// Local NLP solver behind a small callback contract.
//
// Problem form:  min f(x)  s.t.  c(x) = 0,  lo <= x <= hi.
// Inequalities are expected to be written with bounded slack variables.
//
// The shipped implementation is a primal-dual interior-point method in the
// style of Waechter and Biegler: log barrier on the bounds, Newton steps on the
// full primal-dual system (factorized as a regularized quasi-definite LDL^T
// with inertia correction), a filter line search and a small feasibility
// restoration phase.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/OrderingMethods>

#include "polyfly/trajectory.hpp"

namespace polyfly {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;

struct NlpEvaluation {
  double objective = 0.0;
  Eigen::VectorXd gradient;
  Eigen::VectorXd constraints;
  SparseMatrix jacobian;
};

class NlpProblem {
 public:
  virtual ~NlpProblem() = default;
  virtual Eigen::Index num_variables() const = 0;
  virtual Eigen::Index num_constraints() const = 0;
  virtual const Eigen::VectorXd& lower_bounds() const = 0;
  virtual const Eigen::VectorXd& upper_bounds() const = 0;
  /// Objective and constraints; false when x is outside the model's domain.
  virtual bool evaluate_values(const Eigen::VectorXd& x, double& objective, Eigen::VectorXd& constraints) = 0;
  /// Values plus gradient and constraint Jacobian.
  virtual bool evaluate_derivatives(const Eigen::VectorXd& x, NlpEvaluation& out) = 0;
  /// Hessian of obj_factor * f + multipliers . c, as full (both triangles)
  /// triplets. Called at the point of the most recent evaluate_derivatives.
  virtual void hessian(double obj_factor, const Eigen::VectorXd& multipliers, Triplets& out) = 0;
};

enum class SolveStatus { Solved, MaxIter, Infeasible, Diverged };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Solved: return "Solved";
    case SolveStatus::MaxIter: return "MaxIter";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::Diverged: return "Diverged";
  }
  return "?";
}

struct SolveReport {
  SolveStatus status = SolveStatus::Diverged;
  int iterations = 0;
  int outer_iterations = 0;
  double kkt_residual = std::numeric_limits<double>::infinity();
  double constraint_violation = std::numeric_limits<double>::infinity();
  double objective = std::numeric_limits<double>::infinity();
  double wall_time = 0.0;
  double final_barrier = 0.0;
};

struct SolveResult {
  Eigen::VectorXd x;
  Eigen::VectorXd multipliers;
  SolveReport report;
};

class InteriorPointSolver {
 public:
  explicit InteriorPointSolver(SolverOptions options = {}) : opts_(options) {}

  SolveResult solve(NlpProblem& problem, const Eigen::VectorXd& x0) const {
    const auto t0 = std::chrono::steady_clock::now();
    const Bounds bnd(problem.lower_bounds(), problem.upper_bounds());
    const Eigen::Index n = problem.num_variables();
    const Eigen::Index m = problem.num_constraints();

    State s;
    s.x = bnd.push_interior(x0);
    s.y = Eigen::VectorXd::Zero(m);
    s.zl = bnd.has_lo.select(Eigen::ArrayXd::Ones(n), 0.0).matrix();
    s.zu = bnd.has_hi.select(Eigen::ArrayXd::Ones(n), 0.0).matrix();
    s.mu = opts_.initial_barrier;

    SolveResult result;
    auto finish = [&](SolveStatus status) {
      result.x = s.x;
      result.multipliers = s.y;
      result.report.status = status;
      result.report.iterations = s.iterations;
      result.report.outer_iterations = s.barrier_updates;
      result.report.final_barrier = s.mu;
      result.report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      return result;
    };

    NlpEvaluation eval;
    if (!problem.evaluate_derivatives(s.x, eval)) return finish(SolveStatus::Diverged);
    const double mu_min = 0.1 * std::min(opts_.constraint_tol, opts_.kkt_tol);
    const double theta0 = eval.constraints.lpNorm<1>();
    Filter filter(1e4 * std::max(1.0, theta0), 1e-4 * std::max(1.0, theta0));
    KktSystem kkt(n, m);

    while (true) {
      if (!eval.constraints.allFinite() || !std::isfinite(eval.objective) || !eval.gradient.allFinite() ||
          s.x.lpNorm<Eigen::Infinity>() > 1e12) {
        return finish(SolveStatus::Diverged);
      }
      const Eigen::VectorXd grad_lag = eval.gradient + eval.jacobian.transpose() * s.y;
      const Errors err = errors(grad_lag, eval.constraints, s, bnd, 0.0);
      result.report.constraint_violation = err.primal;
      result.report.kkt_residual = std::max(err.dual, err.compl_);
      result.report.objective = eval.objective;
      if (opts_.verbose) {
        std::fprintf(stderr, "it %4d  f %.8e  viol %.3e  dual %.3e  compl %.3e  mu %.1e  reg %.1e\n", s.iterations,
                     eval.objective, err.primal, err.dual, err.compl_, s.mu, s.last_reg);
      }
      if (err.primal <= opts_.constraint_tol && err.dual <= opts_.kkt_tol && err.compl_ <= opts_.kkt_tol) {
        return finish(SolveStatus::Solved);
      }
      if (s.iterations >= opts_.max_iterations) return finish(SolveStatus::MaxIter);

      // Monotone barrier decrease once the current barrier problem is solved.
      while (s.mu > mu_min) {
        const Errors e_mu = errors(grad_lag, eval.constraints, s, bnd, s.mu);
        if (e_mu.max() > kBarrierTolFactor * s.mu) break;
        s.mu = std::max(mu_min, std::min(kBarrierLinear * s.mu, std::pow(s.mu, kBarrierSuperlinear)));
        filter.reset();
        ++s.barrier_updates;
      }
      ++s.iterations;

      const Eigen::ArrayXd sl = bnd.has_lo.select(s.x - bnd.lo, 1.0);
      const Eigen::ArrayXd su = bnd.has_hi.select(bnd.hi - s.x, 1.0);
      const Eigen::ArrayXd sigma =
          bnd.has_lo.select(s.zl.array() / sl, 0.0) + bnd.has_hi.select(s.zu.array() / su, 0.0);
      const Eigen::VectorXd barrier_grad =
          (eval.gradient.array() - bnd.has_lo.select(s.mu / sl, 0.0) + bnd.has_hi.select(s.mu / su, 0.0)).matrix();

      Triplets hess;
      problem.hessian(1.0, s.y, hess);
      Eigen::VectorXd dx, dy;
      if (!kkt.solve_with_inertia_correction(hess, sigma, eval.jacobian, -(barrier_grad + eval.jacobian.transpose() * s.y),
                                             -eval.constraints, s.last_reg, dx, dy)) {
        return finish(SolveStatus::Diverged);
      }

      const double tau = std::max(kMinFractionToBoundary, 1.0 - s.mu);
      const double alpha_max = std::min(max_step(s.x, dx, bnd.lo, bnd.has_lo, 1.0, tau),
                                        max_step(s.x, dx, bnd.hi, bnd.has_hi, -1.0, tau));
      const double theta = eval.constraints.lpNorm<1>();
      const double phi = barrier_value(eval.objective, s.x, s.mu, bnd);
      const double slope = barrier_grad.dot(dx);

      Trial trial;
      const bool found = filter_line_search(problem, s, bnd, filter, dx, alpha_max, theta, phi, slope, trial);
      double alpha = trial.alpha;
      if (!found) {
        filter.add(theta, phi);
        if (!restore_feasibility(problem, s, bnd, kkt, filter, eval, trial)) return finish(SolveStatus::Infeasible);
        dx = trial.x - s.x;
        alpha = 1.0;
        dy.setZero();
      }

      const Eigen::ArrayXd dzl =
          bnd.has_lo.select(s.mu / sl - s.zl.array() - s.zl.array() / sl * (alpha * dx).array(), 0.0);
      const Eigen::ArrayXd dzu =
          bnd.has_hi.select(s.mu / su - s.zu.array() + s.zu.array() / su * (alpha * dx).array(), 0.0);
      const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
      const double alpha_z = std::min(max_step(s.zl, dzl.matrix(), zero, bnd.has_lo, 1.0, tau),
                                      max_step(s.zu, dzu.matrix(), zero, bnd.has_hi, 1.0, tau));
      s.x = trial.x;
      s.y += alpha * dy;
      s.zl += alpha_z * dzl.matrix();
      s.zu += alpha_z * dzu.matrix();
      safeguard_bound_duals(s, bnd);
      if (!problem.evaluate_derivatives(s.x, eval)) return finish(SolveStatus::Diverged);
    }
  }

 private:
  static constexpr double kBoundPush = 1e-2;
  static constexpr double kBarrierTolFactor = 10.0;
  static constexpr double kBarrierLinear = 0.2;
  static constexpr double kBarrierSuperlinear = 1.5;
  static constexpr double kMinFractionToBoundary = 0.99;
  static constexpr double kDualSafeguard = 1e10;
  static constexpr double kScaleMax = 100.0;
  // Filter line search constants.
  static constexpr double kGammaTheta = 1e-5;
  static constexpr double kGammaPhi = 1e-8;
  static constexpr double kGammaAlpha = 0.05;
  static constexpr double kSwitchDelta = 1.0;
  static constexpr double kSwitchSTheta = 1.1;
  static constexpr double kSwitchSPhi = 2.3;
  static constexpr double kArmijo = 1e-4;
  static constexpr int kRestorationIterations = 100;

  struct Bounds {
    Eigen::VectorXd lo, hi;
    Eigen::Array<bool, Eigen::Dynamic, 1> has_lo, has_hi;

    Bounds(const Eigen::VectorXd& l, const Eigen::VectorXd& h) : lo(l), hi(h) {
      has_lo = lo.array().isFinite();
      has_hi = hi.array().isFinite();
    }

    Eigen::VectorXd push_interior(const Eigen::VectorXd& x0) const {
      Eigen::VectorXd x = x0;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        double pl = has_lo(i) ? kBoundPush * std::max(1.0, std::abs(lo(i))) : 0.0;
        double pu = has_hi(i) ? kBoundPush * std::max(1.0, std::abs(hi(i))) : 0.0;
        if (has_lo(i) && has_hi(i)) {
          pl = std::min(pl, kBoundPush * (hi(i) - lo(i)));
          pu = std::min(pu, kBoundPush * (hi(i) - lo(i)));
        }
        if (has_lo(i)) x(i) = std::max(x(i), lo(i) + pl);
        if (has_hi(i)) x(i) = std::min(x(i), hi(i) - pu);
      }
      return x;
    }
  };

  struct State {
    Eigen::VectorXd x, y, zl, zu;
    double mu = 0.1;
    double last_reg = 0.0;
    int iterations = 0;
    int barrier_updates = 0;
  };

  struct Errors {
    double dual = 0.0;
    double primal = 0.0;
    double compl_ = 0.0;
    double max() const { return std::max({dual, primal, compl_}); }
  };

  struct Trial {
    Eigen::VectorXd x;
    Eigen::VectorXd c;
    double f = 0.0;
    double alpha = 0.0;
  };

  class Filter {
   public:
    Filter(double theta_max, double theta_min) : theta_max_(theta_max), theta_min_(theta_min) {}
    void reset() { entries_.clear(); }
    void add(double theta, double phi) {
      entries_.emplace_back((1.0 - kGammaTheta) * theta, phi - kGammaPhi * theta);
    }
    bool acceptable(double theta, double phi) const {
      if (theta > theta_max_) return false;
      for (const auto& [t, p] : entries_) {
        if (theta >= t && phi >= p) return false;
      }
      return true;
    }
    double theta_min() const { return theta_min_; }

   private:
    double theta_max_;
    double theta_min_;
    std::vector<std::pair<double, double>> entries_;
  };

  // Regularized primal-dual system
  //   [ W + Sigma + dw I   J^T   ] [dx]   [r_x]
  //   [ J                 -dc I  ] [dy] = [r_c]
  // solved by sparse LDL^T; dw grows until the inertia is (n, m, 0).
  class KktSystem {
   public:
    KktSystem(Eigen::Index n, Eigen::Index m) : n_(n), m_(m) {}

    bool solve_with_inertia_correction(const Triplets& hess, const Eigen::ArrayXd& sigma, const SparseMatrix& J,
                                       const Eigen::VectorXd& rx, const Eigen::VectorXd& rc, double& last_reg,
                                       Eigen::VectorXd& dx, Eigen::VectorXd& dy) {
      Triplets base;
      base.reserve(hess.size() + static_cast<std::size_t>(n_ + m_) + static_cast<std::size_t>(J.nonZeros()));
      for (const auto& t : hess) {
        if (t.row() >= t.col()) base.push_back(t);
      }
      for (Eigen::Index i = 0; i < n_; ++i) base.emplace_back(i, i, sigma(i));
      for (int k = 0; k < J.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(J, k); it; ++it) base.emplace_back(n_ + it.row(), it.col(), it.value());
      }
      const std::size_t diag_start = base.size();
      for (Eigen::Index i = 0; i < n_ + m_; ++i) base.emplace_back(i, i, 0.0);

      Eigen::VectorXd rhs(n_ + m_);
      rhs << rx, rc;
      double reg = 0.0;
      for (int attempt = 0; attempt < 60; ++attempt) {
        for (Eigen::Index i = 0; i < n_ + m_; ++i) {
          const double v = i < n_ ? reg : -kConstraintReg;
          base[diag_start + static_cast<std::size_t>(i)] = Eigen::Triplet<double>(i, i, v);
        }
        SparseMatrix K(n_ + m_, n_ + m_);
        K.setFromTriplets(base.begin(), base.end());
        if (attempt == 0) ldlt_.analyzePattern(K);
        ldlt_.factorize(K);
        if (ldlt_.info() == Eigen::Success && inertia_ok()) {
          Eigen::VectorXd sol = ldlt_.solve(rhs);
          // Two rounds of iterative refinement against the symmetric matrix.
          const SparseMatrix Kfull = SparseMatrix(K.selfadjointView<Eigen::Lower>());
          for (int r = 0; r < 2; ++r) sol += ldlt_.solve(rhs - Kfull * sol);
          if (sol.allFinite()) {
            dx = sol.head(n_);
            dy = sol.tail(m_);
            last_reg = reg;
            return true;
          }
        }
        if (reg == 0.0) {
          reg = last_reg == 0.0 ? kFirstReg : std::max(kMinReg, last_reg / 3.0);
        } else {
          reg *= last_reg == 0.0 ? 100.0 : 8.0;
        }
        if (reg > kMaxReg) return false;
      }
      return false;
    }

   private:
    static constexpr double kConstraintReg = 1e-9;
    static constexpr double kFirstReg = 1e-4;
    static constexpr double kMinReg = 1e-20;
    static constexpr double kMaxReg = 1e40;

    bool inertia_ok() const {
      const Eigen::VectorXd& d = ldlt_.vectorD();
      Eigen::Index pos = 0;
      Eigen::Index neg = 0;
      for (Eigen::Index i = 0; i < d.size(); ++i) {
        if (d(i) > 0.0) ++pos;
        else if (d(i) < 0.0) ++neg;
      }
      return pos == n_ && neg == m_;
    }

    Eigen::Index n_, m_;
    Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
  };

  static Errors errors(const Eigen::VectorXd& grad_lag, const Eigen::VectorXd& c, const State& s, const Bounds& b,
                       double mu) {
    const Eigen::Index nb = b.has_lo.count() + b.has_hi.count();
    const double zsum = s.zl.lpNorm<1>() + s.zu.lpNorm<1>();
    const double count = static_cast<double>(s.y.size() + nb);
    const double sd = std::max(kScaleMax, count > 0 ? (s.y.lpNorm<1>() + zsum) / count : 0.0) / kScaleMax;
    const double sc = std::max(kScaleMax, nb > 0 ? zsum / static_cast<double>(nb) : 0.0) / kScaleMax;
    Errors e;
    e.dual = (grad_lag - s.zl + s.zu).lpNorm<Eigen::Infinity>() / sd;
    e.primal = c.size() ? c.lpNorm<Eigen::Infinity>() : 0.0;
    double comp = 0.0;
    for (Eigen::Index i = 0; i < s.x.size(); ++i) {
      if (b.has_lo(i)) comp = std::max(comp, std::abs((s.x(i) - b.lo(i)) * s.zl(i) - mu));
      if (b.has_hi(i)) comp = std::max(comp, std::abs((b.hi(i) - s.x(i)) * s.zu(i) - mu));
    }
    e.compl_ = comp / sc;
    return e;
  }

  static double barrier_value(double f, const Eigen::VectorXd& x, double mu, const Bounds& b) {
    double phi = f;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (b.has_lo(i)) phi -= mu * std::log(x(i) - b.lo(i));
      if (b.has_hi(i)) phi -= mu * std::log(b.hi(i) - x(i));
    }
    return phi;
  }

  static double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv, const Eigen::VectorXd& ref,
                         const Eigen::Array<bool, Eigen::Dynamic, 1>& mask, double sign, double tau) {
    double alpha = 1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (!mask(i)) continue;
      const double rate = sign * dv(i);
      if (rate < 0.0) alpha = std::min(alpha, -tau * sign * (v(i) - ref(i)) / rate);
    }
    return alpha;
  }

  static void safeguard_bound_duals(State& s, const Bounds& b) {
    for (Eigen::Index i = 0; i < s.x.size(); ++i) {
      if (b.has_lo(i)) {
        const double gap = s.x(i) - b.lo(i);
        s.zl(i) = std::clamp(s.zl(i), s.mu / (kDualSafeguard * gap), kDualSafeguard * s.mu / gap);
      }
      if (b.has_hi(i)) {
        const double gap = b.hi(i) - s.x(i);
        s.zu(i) = std::clamp(s.zu(i), s.mu / (kDualSafeguard * gap), kDualSafeguard * s.mu / gap);
      }
    }
  }

  bool filter_line_search(NlpProblem& problem, const State& s, const Bounds& b, Filter& filter,
                          const Eigen::VectorXd& dx, double alpha_max, double theta, double phi, double slope,
                          Trial& trial) const {
    double alpha_min = kGammaTheta;
    if (slope < 0.0) {
      alpha_min = std::min(alpha_min, kGammaPhi * theta / -slope);
      if (theta <= filter.theta_min()) {
        alpha_min = std::min(alpha_min, kSwitchDelta * std::pow(theta, kSwitchSTheta) / std::pow(-slope, kSwitchSPhi));
      }
    }
    alpha_min *= kGammaAlpha;

    for (double alpha = alpha_max; alpha >= alpha_min; alpha *= 0.5) {
      trial.x = s.x + alpha * dx;
      if (!problem.evaluate_values(trial.x, trial.f, trial.c)) continue;
      const double theta_t = trial.c.lpNorm<1>();
      const double phi_t = barrier_value(trial.f, trial.x, s.mu, b);
      if (!std::isfinite(phi_t) || !filter.acceptable(theta_t, phi_t)) continue;
      const bool switching = slope < 0.0 && alpha * std::pow(-slope, kSwitchSPhi) > kSwitchDelta * std::pow(theta, kSwitchSTheta);
      if (theta <= filter.theta_min() && switching) {
        if (phi_t <= phi + kArmijo * alpha * slope) {
          trial.alpha = alpha;
          return true;
        }
        continue;
      }
      if (theta_t <= (1.0 - kGammaTheta) * theta || phi_t <= phi - kGammaPhi * theta) {
        filter.add(theta, phi);
        trial.alpha = alpha;
        return true;
      }
    }
    return false;
  }

  // Reduces ||c||^2 with regularized Gauss-Newton steps that keep the bound
  // barrier, until the point becomes acceptable to the filter.
  bool restore_feasibility(NlpProblem& problem, State& s, const Bounds& b, KktSystem& kkt, const Filter& filter,
                           NlpEvaluation& eval, Trial& out) const {
    const Eigen::Index n = s.x.size();
    Eigen::VectorXd x = s.x;
    Eigen::VectorXd c = eval.constraints;
    double f = eval.objective;
    const double theta_start = c.lpNorm<1>();
    double reg = 0.0;
    NlpEvaluation local = eval;
    for (int it = 0; it < kRestorationIterations; ++it) {
      const Eigen::ArrayXd sl = b.has_lo.select(x - b.lo, 1.0);
      const Eigen::ArrayXd su = b.has_hi.select(b.hi - x, 1.0);
      const double mu = std::min(s.mu, 1e-2 * std::max(1e-8, c.lpNorm<Eigen::Infinity>()));
      const Eigen::ArrayXd sigma = b.has_lo.select(mu / (sl * sl), 0.0) + b.has_hi.select(mu / (su * su), 0.0) +
                                   std::sqrt(std::max(mu, 1e-12));
      const Eigen::VectorXd rx = (b.has_lo.select(mu / sl, 0.0) - b.has_hi.select(mu / su, 0.0)).matrix();
      Eigen::VectorXd dx, dy;
      if (!kkt.solve_with_inertia_correction({}, sigma, local.jacobian, rx, -c, reg, dx, dy)) return false;
      const double tau = std::max(kMinFractionToBoundary, 1.0 - mu);
      double alpha = std::min(max_step(x, dx, b.lo, b.has_lo, 1.0, tau), max_step(x, dx, b.hi, b.has_hi, -1.0, tau));
      const double merit0 = c.squaredNorm();
      bool moved = false;
      for (; alpha > 1e-12; alpha *= 0.5) {
        Eigen::VectorXd xt = x + alpha * dx;
        double ft = 0.0;
        Eigen::VectorXd ct;
        if (!problem.evaluate_values(xt, ft, ct)) continue;
        if (ct.squaredNorm() <= (1.0 - 1e-4 * alpha) * merit0) {
          x = xt;
          c = ct;
          f = ft;
          moved = true;
          break;
        }
      }
      if (!moved) return false;
      if (!problem.evaluate_derivatives(x, local)) return false;
      const double theta = c.lpNorm<1>();
      if (theta <= 0.9 * theta_start && filter.acceptable(theta, barrier_value(f, x, s.mu, b))) {
        out.x = x;
        out.c = c;
        out.f = f;
        out.alpha = 1.0;
        return true;
      }
    }
    (void)n;
    return false;
  }

  SolverOptions opts_;
};

}  // namespace polyfly
