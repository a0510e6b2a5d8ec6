#include "resnmpc/gp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "resnmpc/errors.hpp"
#include "resnmpc/optimizer.hpp"
#include "resnmpc/types.hpp"

namespace resnmpc {

namespace {

// Cholesky with the bounded jitter-retry policy shared by the GP models.
// Returns the lower factor and the jitter that was finally applied.
std::pair<Eigen::MatrixXd, double> cholesky_with_jitter(
    const Eigen::MatrixXd& gram, double sigma_f) {
  const int n = static_cast<int>(gram.rows());
  double jitter = 0.0;
  double step = 1e-10 * sigma_f * sigma_f;
  for (int attempt = 0; attempt <= 7; ++attempt) {
    Eigen::MatrixXd k = gram;
    if (jitter > 0.0) k.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() == Eigen::Success) {
      return {Eigen::MatrixXd(llt.matrixL()), jitter};
    }
    jitter = (attempt == 0) ? step : jitter * 2.0;
  }
  throw SolverError("gp: kernel matrix is singular (n = " + std::to_string(n) +
                    ", jitter exhausted)");
}

}  // namespace

GpDataset GpDataset::from_raw(Eigen::MatrixXd inputs, Eigen::VectorXd targets) {
  if (inputs.rows() != targets.size() || inputs.rows() < 1) {
    throw std::invalid_argument("GpDataset: |X| and |y| must match and be >= 1");
  }
  if (!inputs.allFinite() || !targets.allFinite()) {
    throw std::invalid_argument("GpDataset: non-finite entries");
  }
  GpDataset d;
  d.y_mean = targets.mean();
  targets.array() -= d.y_mean;
  d.X = std::move(inputs);
  d.y = std::move(targets);
  return d;
}

ExactGpModel ExactGpModel::fit(GpDataset data, const KernelHyperparams& hyp) {
  hyp.validate(/*allow_zero_noise=*/true);
  if (hyp.sigma_n == 0.0) {
    const auto dup = find_duplicate_rows(data.X);
    if (dup.first >= 0) {
      throw SolverError("gp: singular kernel, duplicate inputs " +
                        std::to_string(dup.first) + " and " +
                        std::to_string(dup.second) + " with zero noise");
    }
  }

  Eigen::MatrixXd gram = se_kernel_matrix(data.X, data.X, hyp);
  gram.diagonal().array() += hyp.sigma_n * hyp.sigma_n;

  ExactGpModel model;
  auto [lower, jitter] = cholesky_with_jitter(gram, hyp.sigma_f);
  model.chol_lower_ = std::move(lower);
  model.jitter_ = jitter;
  model.alpha_vec_ = model.chol_lower_.triangularView<Eigen::Lower>().solve(data.y);
  model.chol_lower_.triangularView<Eigen::Lower>().transpose().solveInPlace(
      model.alpha_vec_);
  model.data_ = std::move(data);
  model.hyp_ = hyp;
  return model;
}

GpPrediction ExactGpModel::predict(
    const Eigen::Ref<const Eigen::VectorXd>& x_star) const {
  const int n = data_.n();
  Eigen::VectorXd k_star(n);
  for (int i = 0; i < n; ++i) {
    k_star[i] = se_kernel(data_.X.row(i).transpose(), x_star, hyp_);
  }
  GpPrediction out;
  out.mean = data_.y_mean + k_star.dot(alpha_vec_);
  const Eigen::VectorXd v =
      chol_lower_.triangularView<Eigen::Lower>().solve(k_star);
  out.variance =
      std::max(0.0, hyp_.sigma_f * hyp_.sigma_f - v.squaredNorm());
  return out;
}

GpPrediction ExactGpModel::predict(double x_star) const {
  Eigen::VectorXd x(1);
  x[0] = x_star;
  return predict(x);
}

double ExactGpModel::log_marginal_likelihood() const {
  const int n = data_.n();
  const double quad = data_.y.dot(alpha_vec_);
  const double log_det =
      2.0 * chol_lower_.diagonal().array().log().sum();
  return -0.5 * quad - 0.5 * log_det -
         0.5 * static_cast<double>(n) * std::log(2.0 * kPi);
}

Eigen::Vector3d ExactGpModel::log_marginal_likelihood_gradient() const {
  const int n = data_.n();
  // K^{-1} via the cached factor, then the classic 0.5 tr((aa^T - K^{-1}) dK).
  Eigen::MatrixXd k_inv = Eigen::MatrixXd::Identity(n, n);
  chol_lower_.triangularView<Eigen::Lower>().solveInPlace(k_inv);
  chol_lower_.triangularView<Eigen::Lower>().transpose().solveInPlace(k_inv);
  const Eigen::MatrixXd w = alpha_vec_ * alpha_vec_.transpose() - k_inv;

  const Eigen::MatrixXd d2 = squared_distances(data_.X, data_.X);
  const Eigen::MatrixXd k_free = se_kernel_matrix(data_.X, data_.X, hyp_);

  Eigen::Vector3d grad;
  const double l2 = hyp_.length_scale * hyp_.length_scale;
  grad[0] = 0.5 * (w.array() * (2.0 * k_free).array()).sum();
  grad[1] = 0.5 * (w.array() * (k_free.array() * d2.array() / l2)).sum();
  grad[2] = 0.5 * w.trace() * 2.0 * hyp_.sigma_n * hyp_.sigma_n;
  return grad;
}

KernelHyperparams optimize_hyperparams(const GpDataset& data,
                                       const KernelHyperparams& init,
                                       HyperparamFitReport* report) {
  if (data.n() < 3) {
    throw std::invalid_argument("optimize_hyperparams: need n >= 3");
  }
  init.validate();

  const auto objective = [&data](const Eigen::VectorXd& log_params,
                                 Eigen::VectorXd* grad) -> double {
    const KernelHyperparams hyp =
        KernelHyperparams::from_log(Eigen::Vector3d(log_params));
    try {
      const ExactGpModel model = ExactGpModel::fit(data, hyp);
      if (grad != nullptr) {
        *grad = -model.log_marginal_likelihood_gradient();
      }
      return -model.log_marginal_likelihood();
    } catch (const SolverError&) {
      // Unfactorizable trial point; reject it via an infinite objective.
      if (grad != nullptr) grad->setConstant(log_params.size(), 0.0);
      return std::numeric_limits<double>::infinity();
    } catch (const std::invalid_argument&) {
      if (grad != nullptr) grad->setConstant(log_params.size(), 0.0);
      return std::numeric_limits<double>::infinity();
    }
  };

  const BfgsResult res = bfgs_minimize(objective, init.to_log());
  if (report != nullptr) {
    report->iters = res.iters;
    report->converged = res.converged;
    report->log_marginal_likelihood = -res.f;
  }
  return KernelHyperparams::from_log(Eigen::Vector3d(res.x));
}

}  // namespace resnmpc
