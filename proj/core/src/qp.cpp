#include "resnmpc/qp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace resnmpc {

namespace {

constexpr double kFeasTol = 1e-9;
constexpr double kStepTol = 1e-11;
constexpr double kMultTol = 1e-9;

enum class BoundState { kFree, kLower, kUpper };

}  // namespace

QpSolution solve_qp(const QpProblem& p, const Eigen::VectorXd& x0) {
  const int n = static_cast<int>(p.H.rows());
  const int n_rows = static_cast<int>(p.A.rows());
  if (p.c.size() != n || p.lb.size() != n || p.ub.size() != n ||
      (n_rows > 0 && p.A.cols() != n) || p.b.size() != n_rows) {
    throw std::invalid_argument("solve_qp: inconsistent dimensions");
  }

  QpSolution sol;
  sol.x = x0;
  sol.row_multipliers = Eigen::VectorXd::Zero(n_rows);

  // Snap to bounds within tolerance, otherwise reject the start.
  std::vector<BoundState> bound(n, BoundState::kFree);
  for (int i = 0; i < n; ++i) {
    if (sol.x[i] <= p.lb[i] + kFeasTol) {
      sol.x[i] = p.lb[i];
      bound[i] = BoundState::kLower;
    } else if (sol.x[i] >= p.ub[i] - kFeasTol) {
      sol.x[i] = p.ub[i];
      bound[i] = BoundState::kUpper;
    }
    if (sol.x[i] < p.lb[i] - kFeasTol || sol.x[i] > p.ub[i] + kFeasTol) {
      sol.status = QpStatus::kInfeasibleStart;
      return sol;
    }
  }
  std::vector<bool> row_active(n_rows, false);
  const double row_scale = 1.0 + (n_rows > 0 ? p.b.cwiseAbs().maxCoeff() : 0.0);
  for (int r = 0; r < n_rows; ++r) {
    const double v = p.A.row(r).dot(sol.x) - p.b[r];
    if (v > kFeasTol * row_scale) {
      sol.status = QpStatus::kInfeasibleStart;
      return sol;
    }
    if (v > -kFeasTol * row_scale) row_active[r] = true;
  }

  const int max_iters = 30 * (n + n_rows) + 100;
  for (int iter = 0; iter < max_iters; ++iter) {
    sol.iterations = iter + 1;

    std::vector<int> free_idx;
    for (int i = 0; i < n; ++i) {
      if (bound[i] == BoundState::kFree) free_idx.push_back(i);
    }
    std::vector<int> active_rows;
    for (int r = 0; r < n_rows; ++r) {
      if (row_active[r]) active_rows.push_back(r);
    }
    const int nf = static_cast<int>(free_idx.size());
    const int na = static_cast<int>(active_rows.size());

    const Eigen::VectorXd grad = p.H * sol.x + p.c;

    // Equality-constrained subproblem over the free variables.
    Eigen::VectorXd step = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(na);
    if (nf > 0) {
      Eigen::MatrixXd kkt(nf + na, nf + na);
      kkt.setZero();
      for (int a = 0; a < nf; ++a) {
        for (int c2 = 0; c2 < nf; ++c2) kkt(a, c2) = p.H(free_idx[a], free_idx[c2]);
      }
      for (int r = 0; r < na; ++r) {
        for (int a = 0; a < nf; ++a) {
          kkt(nf + r, a) = p.A(active_rows[r], free_idx[a]);
          kkt(a, nf + r) = kkt(nf + r, a);
        }
      }
      Eigen::VectorXd rhs(nf + na);
      for (int a = 0; a < nf; ++a) rhs[a] = -grad[free_idx[a]];
      rhs.tail(na).setZero();

      Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
      Eigen::VectorXd pz;
      if (lu.isInvertible()) {
        pz = lu.solve(rhs);
      } else {
        // Degenerate working set: regularize the Hessian block slightly.
        for (int a = 0; a < nf; ++a) kkt(a, a) += 1e-10;
        pz = Eigen::FullPivLU<Eigen::MatrixXd>(kkt).solve(rhs);
      }
      for (int a = 0; a < nf; ++a) step[free_idx[a]] = pz[a];
      lambda = pz.tail(na);
    }

    const double step_norm = step.lpNorm<Eigen::Infinity>();
    if (step_norm <= kStepTol * (1.0 + sol.x.lpNorm<Eigen::Infinity>())) {
      // Stationary on the working set; inspect the multipliers.
      Eigen::VectorXd resid = grad;
      for (int r = 0; r < na; ++r) {
        resid += lambda[r] * p.A.row(active_rows[r]).transpose();
      }

      int worst_row = -1, worst_bound = -1;
      double worst = -kMultTol;
      for (int r = 0; r < na; ++r) {
        if (lambda[r] < worst) {
          worst = lambda[r];
          worst_row = r;
        }
      }
      for (int i = 0; i < n; ++i) {
        if (bound[i] == BoundState::kFree || p.lb[i] == p.ub[i]) continue;
        const double mult = bound[i] == BoundState::kLower ? resid[i] : -resid[i];
        if (mult < worst) {
          worst = mult;
          worst_bound = i;
          worst_row = -1;
        }
      }

      if (worst_row < 0 && worst_bound < 0) {
        for (int r = 0; r < na; ++r) sol.row_multipliers[active_rows[r]] = std::max(0.0, lambda[r]);
        sol.status = QpStatus::kOptimal;
        return sol;
      }
      if (worst_row >= 0) {
        row_active[active_rows[worst_row]] = false;
      } else {
        bound[worst_bound] = BoundState::kFree;
      }
      continue;
    }

    // Ratio test against the inactive constraints.
    double alpha = 1.0;
    int block_bound = -1, block_row = -1;
    bool block_is_upper = false;
    for (int i : free_idx) {
      if (step[i] > kStepTol && std::isfinite(p.ub[i])) {
        const double a = (p.ub[i] - sol.x[i]) / step[i];
        if (a < alpha) {
          alpha = a;
          block_bound = i;
          block_row = -1;
          block_is_upper = true;
        }
      } else if (step[i] < -kStepTol && std::isfinite(p.lb[i])) {
        const double a = (p.lb[i] - sol.x[i]) / step[i];
        if (a < alpha) {
          alpha = a;
          block_bound = i;
          block_row = -1;
          block_is_upper = false;
        }
      }
    }
    for (int r = 0; r < n_rows; ++r) {
      if (row_active[r]) continue;
      const double along = p.A.row(r).dot(step);
      if (along > kStepTol) {
        const double slack = p.b[r] - p.A.row(r).dot(sol.x);
        const double a = std::max(0.0, slack) / along;
        if (a < alpha) {
          alpha = a;
          block_row = r;
          block_bound = -1;
        }
      }
    }

    sol.x += alpha * step;
    if (block_bound >= 0) {
      sol.x[block_bound] = block_is_upper ? p.ub[block_bound] : p.lb[block_bound];
      bound[block_bound] = block_is_upper ? BoundState::kUpper : BoundState::kLower;
    } else if (block_row >= 0) {
      row_active[block_row] = true;
    }
  }

  sol.status = QpStatus::kMaxIterations;
  return sol;
}

}  // namespace resnmpc
