#pragma once

#include <Eigen/Dense>

namespace resnmpc {

// Strictly convex dense QP with variable bounds and general inequality rows:
//   min 1/2 x^T H x + c^T x   s.t.  lb <= x <= ub,  A x <= b.
// Bounds may be +-infinity; lb == ub pins a variable.
struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd c;
  Eigen::VectorXd lb;
  Eigen::VectorXd ub;
  Eigen::MatrixXd A;  // may have zero rows
  Eigen::VectorXd b;
};

enum class QpStatus { kOptimal, kMaxIterations, kInfeasibleStart };

struct QpSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd row_multipliers;  // one per row of A, >= 0 at the optimum
  QpStatus status = QpStatus::kOptimal;
  int iterations = 0;
};

// Primal active-set method. x0 must satisfy the bounds and rows up to a small
// tolerance, otherwise kInfeasibleStart is returned.
QpSolution solve_qp(const QpProblem& problem, const Eigen::VectorXd& x0);

}  // namespace resnmpc
