#include "resnmpc/optimizer.hpp"

#include <cmath>
#include <sstream>

#include "resnmpc/errors.hpp"

namespace resnmpc {

namespace {

std::string describe_iterate(const Eigen::VectorXd& x, int iter) {
  std::ostringstream os;
  os << "iter " << iter << ", x = [";
  for (int i = 0; i < x.size(); ++i) {
    os << (i ? ", " : "") << x[i];
  }
  os << "]";
  return os.str();
}

}  // namespace

BfgsResult bfgs_minimize(const ObjectiveFn& fg, const Eigen::VectorXd& x0,
                         const BfgsOptions& opts) {
  const int n = static_cast<int>(x0.size());
  BfgsResult res;
  res.x = x0;
  res.grad.resize(n);

  double f = fg(res.x, &res.grad);
  if (!std::isfinite(f) || !res.grad.allFinite()) {
    throw SolverError("bfgs: non-finite objective at " + describe_iterate(res.x, 0));
  }
  res.f = f;
  res.objective_trace.push_back(f);

  // Unit-length first step; the update restores the natural scaling.
  Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(n, n) /
                          std::max(1.0, res.grad.norm());
  int stalled = 0;

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    if (res.grad.norm() < opts.grad_tol) {
      res.converged = true;
      res.iters = iter;
      return res;
    }

    Eigen::VectorXd dir = -(h_inv * res.grad);
    double descent = dir.dot(res.grad);
    if (!(descent < 0.0)) {
      // Reset a corrupted curvature estimate.
      h_inv = Eigen::MatrixXd::Identity(n, n) / std::max(1.0, res.grad.norm());
      dir = -(h_inv * res.grad);
      descent = dir.dot(res.grad);
    }
    if (dir.norm() > opts.max_step_norm) {
      dir *= opts.max_step_norm / dir.norm();
      descent = dir.dot(res.grad);
    }

    double alpha = 1.0;
    double f_new = 0.0;
    Eigen::VectorXd x_new, g_new(n);
    bool accepted = false;
    for (int ls = 0; ls < opts.max_line_search_steps; ++ls) {
      x_new = res.x + alpha * dir;
      f_new = fg(x_new, &g_new);
      if (std::isfinite(f_new) && g_new.allFinite() &&
          f_new <= res.f + opts.armijo_c1 * alpha * descent) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      // No further progress along a descent direction.
      res.iters = iter;
      res.converged = res.grad.norm() < 10.0 * opts.grad_tol;
      return res;
    }
    if (!std::isfinite(f_new)) {
      throw SolverError("bfgs: non-finite objective at " +
                        describe_iterate(x_new, iter + 1));
    }

    const Eigen::VectorXd s = x_new - res.x;
    const Eigen::VectorXd y = g_new - res.grad;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd i_mat = Eigen::MatrixXd::Identity(n, n);
      h_inv = (i_mat - rho * s * y.transpose()) * h_inv *
                  (i_mat - rho * y * s.transpose()) +
              rho * s * s.transpose();
    }

    const double improvement = res.f - f_new;
    res.x = x_new;
    res.f = f_new;
    res.grad = g_new;
    res.objective_trace.push_back(f_new);
    res.iters = iter + 1;

    // Plateau: successive accepted steps no longer move the objective.
    if (improvement <= 1e-10 * (1.0 + std::abs(f_new))) {
      if (++stalled >= 3) {
        res.converged = true;
        return res;
      }
    } else {
      stalled = 0;
    }
  }
  res.converged = res.grad.norm() < opts.grad_tol;
  return res;
}

}  // namespace resnmpc
