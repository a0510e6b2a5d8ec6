#pragma once

#include <Eigen/Dense>

#include "resnmpc/kernel.hpp"

namespace resnmpc {

// Training data with centered targets; the subtracted mean is kept so
// predictions can be reported in the original units.
struct GpDataset {
  Eigen::MatrixXd X;   // n x d inputs
  Eigen::VectorXd y;   // n centered targets
  double y_mean = 0.0;

  static GpDataset from_raw(Eigen::MatrixXd inputs, Eigen::VectorXd targets);

  int n() const { return static_cast<int>(X.rows()); }
  int dim() const { return static_cast<int>(X.cols()); }
};

struct GpPrediction {
  double mean = 0.0;
  double variance = 0.0;
};

// Exact GP regression with the SE kernel. Serves as the correctness oracle
// for the sparse approximation and as the hyperparameter-fitting engine.
class ExactGpModel {
 public:
  // Factorizes K(X,X) + sigma_n^2 I, adding 1e-10 sigma_f^2 of jitter and
  // doubling up to 6 times if the factorization fails. Exactly duplicated
  // inputs with sigma_n = 0 are rejected as a singular kernel.
  static ExactGpModel fit(GpDataset data, const KernelHyperparams& hyp);

  GpPrediction predict(const Eigen::Ref<const Eigen::VectorXd>& x_star) const;
  GpPrediction predict(double x_star) const;

  double log_marginal_likelihood() const;
  // d lml / d (log sigma_f, log length_scale, log sigma_n).
  Eigen::Vector3d log_marginal_likelihood_gradient() const;

  const GpDataset& data() const { return data_; }
  const KernelHyperparams& hyp() const { return hyp_; }
  const Eigen::MatrixXd& chol_lower() const { return chol_lower_; }
  const Eigen::VectorXd& alpha_vec() const { return alpha_vec_; }
  double jitter() const { return jitter_; }

 private:
  ExactGpModel() = default;

  GpDataset data_;
  KernelHyperparams hyp_;
  Eigen::MatrixXd chol_lower_;  // L with L L^T = K + sigma_n^2 I (+ jitter)
  Eigen::VectorXd alpha_vec_;   // (K + sigma_n^2 I)^{-1} y
  double jitter_ = 0.0;
};

struct HyperparamFitReport {
  int iters = 0;
  bool converged = false;
  double log_marginal_likelihood = 0.0;
};

// Quasi-Newton ascent of the log marginal likelihood in log-parameter space
// (gradient norm < 1e-5 or 500 iterations).
KernelHyperparams optimize_hyperparams(const GpDataset& data,
                                       const KernelHyperparams& init,
                                       HyperparamFitReport* report = nullptr);

}  // namespace resnmpc
