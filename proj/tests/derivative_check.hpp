#pragma once

// Central finite-difference check of an NlpProblem: objective gradient,
// constraint Jacobian, and Hessian of the Lagrangian (differences of the
// analytic Lagrangian gradient).

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "oracles.hpp"
#include "polyfly/initializer.hpp"
#include "polyfly/nlp.hpp"
#include "polyfly/solver.hpp"

namespace oracle {

struct DerivativeErrors {
  double gradient = 0.0;
  double jacobian = 0.0;
  double hessian = 0.0;
  bool domain_ok = true;

  double max() const { return std::max({gradient, jacobian, hessian}); }
};

/// |a - b| / max(1, |a|, |b|)
inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

inline Eigen::VectorXd lagrangian_gradient(const polyfly::NlpEvaluation& ev, const Eigen::VectorXd& lambda) {
  return ev.gradient + ev.jacobian.transpose() * lambda;
}

inline DerivativeErrors check_derivatives(polyfly::NlpProblem& prob, const Eigen::VectorXd& x,
                                          const Eigen::VectorXd& lambda, double h = 1e-6) {
  DerivativeErrors out;
  const Eigen::Index n = prob.num_variables();
  polyfly::NlpEvaluation ev;
  if (!prob.evaluate_derivatives(x, ev)) {
    out.domain_ok = false;
    return out;
  }
  const Eigen::MatrixXd J = Eigen::MatrixXd(ev.jacobian);
  polyfly::Triplets trip;
  prob.hessian(1.0, lambda, trip);
  Eigen::SparseMatrix<double> Hs(n, n);
  Hs.setFromTriplets(trip.begin(), trip.end());
  const Eigen::MatrixXd H = Eigen::MatrixXd(Hs);

  Eigen::VectorXd cp(prob.num_constraints()), cm(prob.num_constraints());
  polyfly::NlpEvaluation evp, evm;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    double fp = 0.0, fm = 0.0;
    if (!prob.evaluate_values(xp, fp, cp) || !prob.evaluate_values(xm, fm, cm)) {
      out.domain_ok = false;
      return out;
    }
    out.gradient = std::max(out.gradient, rel_err(ev.gradient(i), (fp - fm) / (2 * h)));
    const Eigen::VectorXd dc = (cp - cm) / (2 * h);
    for (Eigen::Index r = 0; r < dc.size(); ++r) out.jacobian = std::max(out.jacobian, rel_err(J(r, i), dc(r)));
    prob.evaluate_derivatives(xp, evp);
    prob.evaluate_derivatives(xm, evm);
    const Eigen::VectorXd dg = (lagrangian_gradient(evp, lambda) - lagrangian_gradient(evm, lambda)) / (2 * h);
    for (Eigen::Index r = 0; r < n; ++r) out.hessian = std::max(out.hessian, rel_err(H(r, i), dg(r)));
  }
  return out;
}

/// A random interior point of the planning problem around the seed: states,
/// inputs, durations, duals and slacks drawn inside their boxes.
inline Eigen::VectorXd random_point(polyfly::TrajectoryProblem& prob, const polyfly::Trajectory& seed,
                                    std::mt19937_64& rng) {
  polyfly::Trajectory t = seed;
  for (auto& s : t.states) {
    s.x_L += uniform_vec(rng, -0.2, 0.2);
    s.v_L = uniform_vec(rng, -2.0, 2.0);
    s.a_L = uniform_vec(rng, -3.0, 3.0);
  }
  for (auto& u : t.inputs) u.j_L = uniform_vec(rng, -5.0, 5.0);
  for (auto& dt : t.durations) dt = uniform(rng, 0.02, 0.24);
  for (auto& d : t.duals) {
    for (Eigen::Index i = 0; i < d.lambda_M.size(); ++i) d.lambda_M(i) = uniform(rng, 0.0, 0.5);
    for (Eigen::Index i = 0; i < d.lambda_N.size(); ++i) d.lambda_N(i) = uniform(rng, 0.0, 0.5);
  }
  Eigen::VectorXd x = prob.pack(t);
  for (Eigen::Index i = prob.decision_size(); i < x.size(); ++i) x(i) = uniform(rng, 0.01, 1.0);
  return x;
}

inline Eigen::VectorXd random_multipliers(Eigen::Index m, std::mt19937_64& rng) {
  Eigen::VectorXd l(m);
  for (Eigen::Index i = 0; i < m; ++i) l(i) = uniform(rng, -1.0, 1.0);
  return l;
}

}  // namespace oracle
