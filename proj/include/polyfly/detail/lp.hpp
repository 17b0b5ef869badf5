#pragma once

// Dense two-phase tableau simplex for the small linear programs that show up in
// polytope bookkeeping (boundedness probes, support functions, interior depth).
// Problems here have at most a few dozen rows, so a dense tableau with Bland's
// anti-cycling rule is plenty.

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace polyfly::detail {

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  double value = 0.0;
  Eigen::VectorXd x;
};

class TableauSimplex {
 public:
  // maximize c^T x  s.t.  A x <= b,  x >= 0
  TableauSimplex(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c)
      : m_(static_cast<int>(A.rows())), n_(static_cast<int>(A.cols())),
        D_(Eigen::MatrixXd::Zero(m_ + 2, n_ + 2)), basis_(m_), nonbasis_(n_ + 1) {
    for (int i = 0; i < m_; ++i) {
      for (int j = 0; j < n_; ++j) D_(i, j) = A(i, j);
      D_(i, n_) = -1.0;
      D_(i, n_ + 1) = b(i);
      basis_[i] = n_ + i;
    }
    for (int j = 0; j < n_; ++j) {
      nonbasis_[j] = j;
      D_(m_, j) = -c(j);
    }
    nonbasis_[n_] = -1;
    D_(m_ + 1, n_) = 1.0;
  }

  LpResult solve() {
    LpResult result;
    result.x = Eigen::VectorXd::Zero(n_);
    int r = 0;
    for (int i = 1; i < m_; ++i) {
      if (D_(i, n_ + 1) < D_(r, n_ + 1)) r = i;
    }
    if (m_ > 0 && D_(r, n_ + 1) < -kEps) {
      pivot(r, n_);
      if (!run(1) || D_(m_ + 1, n_ + 1) < -kFeasTol) {
        result.status = LpStatus::Infeasible;
        return result;
      }
      for (int i = 0; i < m_; ++i) {
        if (basis_[i] != -1) continue;
        int s = -1;
        for (int j = 0; j <= n_; ++j) {
          if (s == -1 || D_(i, j) < D_(i, s) || (D_(i, j) == D_(i, s) && nonbasis_[j] < nonbasis_[s])) s = j;
        }
        pivot(i, s);
      }
    }
    if (!run(2)) {
      result.status = LpStatus::Unbounded;
      result.value = std::numeric_limits<double>::infinity();
      return result;
    }
    for (int i = 0; i < m_; ++i) {
      if (basis_[i] >= 0 && basis_[i] < n_) result.x(basis_[i]) = D_(i, n_ + 1);
    }
    result.status = LpStatus::Optimal;
    result.value = D_(m_, n_ + 1);
    return result;
  }

 private:
  static constexpr double kEps = 1e-11;
  static constexpr double kFeasTol = 1e-9;
  static constexpr int kMaxPivots = 20000;

  void pivot(int r, int s) {
    const double inv = 1.0 / D_(r, s);
    for (int i = 0; i < m_ + 2; ++i) {
      if (i == r || D_(i, s) == 0.0) continue;
      const double f = D_(i, s) * inv;
      for (int j = 0; j < n_ + 2; ++j) {
        if (j != s) D_(i, j) -= D_(r, j) * f;
      }
      D_(i, s) = -f;
    }
    for (int j = 0; j < n_ + 2; ++j) {
      if (j != s) D_(r, j) *= inv;
    }
    D_(r, s) = inv;
    std::swap(basis_[r], nonbasis_[s]);
  }

  // Bland's rule: entering variable with the smallest label among improving
  // columns; leaving row by minimum ratio, ties by smallest basis label.
  bool run(int phase) {
    const int obj = phase == 1 ? m_ + 1 : m_;
    for (int iter = 0; iter < kMaxPivots; ++iter) {
      int s = -1;
      for (int j = 0; j <= n_; ++j) {
        if (phase == 2 && nonbasis_[j] == -1) continue;
        if (D_(obj, j) < -kEps && (s == -1 || nonbasis_[j] < nonbasis_[s])) s = j;
      }
      if (s == -1) return true;
      int r = -1;
      for (int i = 0; i < m_; ++i) {
        if (D_(i, s) <= kEps) continue;
        if (r == -1) {
          r = i;
          continue;
        }
        const double lhs = D_(i, n_ + 1) / D_(i, s);
        const double rhs = D_(r, n_ + 1) / D_(r, s);
        if (lhs < rhs - 1e-14 || (std::abs(lhs - rhs) <= 1e-14 && basis_[i] < basis_[r])) r = i;
      }
      if (r == -1) return false;
      pivot(r, s);
    }
    return true;
  }

  int m_;
  int n_;
  Eigen::MatrixXd D_;
  std::vector<int> basis_;
  std::vector<int> nonbasis_;
};

/// maximize c^T x  s.t.  A x <= b,  x >= 0.
inline LpResult solve_lp_nonneg(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                const Eigen::VectorXd& c) {
  return TableauSimplex(A, b, c).solve();
}

/// maximize c^T z  s.t.  G z <= h  with z unrestricted in sign.
inline LpResult solve_lp_free(const Eigen::MatrixXd& G, const Eigen::VectorXd& h,
                              const Eigen::VectorXd& c) {
  const Eigen::Index n = G.cols();
  Eigen::MatrixXd A(G.rows(), 2 * n);
  A << G, -G;
  Eigen::VectorXd cc(2 * n);
  cc << c, -c;
  LpResult split = solve_lp_nonneg(A, h, cc);
  LpResult result;
  result.status = split.status;
  result.value = split.value;
  result.x = split.x.head(n) - split.x.tail(n);
  return result;
}

}  // namespace polyfly::detail
