#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace resnmpc {

struct BfgsOptions {
  int max_iters = 500;
  double grad_tol = 1e-5;
  int max_line_search_steps = 40;
  double armijo_c1 = 1e-4;
  double max_step_norm = 20.0;  // trust cap on a single line-search direction
};

struct BfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  Eigen::VectorXd grad;
  int iters = 0;
  bool converged = false;
  std::vector<double> objective_trace;  // accepted objective values
};

// Dense BFGS minimization with Armijo backtracking. The callable evaluates
// f(x) and, when grad is non-null, writes the gradient.
// Throws SolverError when the objective is non-finite at the initial point
// or at an accepted iterate.
using ObjectiveFn =
    std::function<double(const Eigen::VectorXd&, Eigen::VectorXd* grad)>;

BfgsResult bfgs_minimize(const ObjectiveFn& fg, const Eigen::VectorXd& x0,
                         const BfgsOptions& opts = {});

}  // namespace resnmpc
