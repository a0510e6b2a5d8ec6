#pragma once

#include <Eigen/Dense>
#include <array>
#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "resnmpc/gp.hpp"
#include "resnmpc/kernel.hpp"

namespace resnmpc {

struct ElboReport {
  double elbo = 0.0;
  std::optional<double> exact_lml;
  std::optional<double> gap;  // exact_lml - elbo when both known
};

// Collapsed variational bound over the inducing inputs:
//   L(x_m) = log N(y | 0, sigma_n^2 I + K_nm K_mm^{-1} K_mn)
//            - 1/(2 sigma_n^2) Tr(K_nn - K_nm K_mm^{-1} K_mn)
// Always <= the exact log marginal likelihood.
double sgp_elbo(const GpDataset& data, const KernelHyperparams& hyp,
                const Eigen::MatrixXd& x_m);

struct ElboGradient {
  double value = 0.0;
  Eigen::Vector3d log_hyp;  // d/d(log sigma_f, log l, log sigma_n)
  Eigen::MatrixXd x_m;      // m x d, d/d inducing locations
};

ElboGradient sgp_elbo_with_gradient(const GpDataset& data,
                                    const KernelHyperparams& hyp,
                                    const Eigen::MatrixXd& x_m);

// Closed-form variational posterior over the inducing outputs:
//   mu = 1/sigma_n^2 K_mm Sigma^{-1} K_mn y,  A = K_mm Sigma^{-1} K_mm,
//   Sigma = K_mm + sigma_n^{-2} K_mn K_nm.
// A is symmetrized before being returned.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> compute_variational_params(
    const GpDataset& data, const KernelHyperparams& hyp,
    const Eigen::MatrixXd& x_m);

// Per-axis sparse GP; immutable once finalized.
class SgpModel {
 public:
  SgpModel() = default;
  SgpModel(KernelHyperparams hyp, Eigen::MatrixXd x_m, Eigen::VectorXd mu,
           Eigen::MatrixXd a_cov, double data_mean, double delta_v);

  GpPrediction predict(const Eigen::Ref<const Eigen::VectorXd>& x_star) const;
  GpPrediction predict(double x_star) const;
  // Predictive mean together with its gradient in the input.
  void predict_mean_grad(const Eigen::Ref<const Eigen::VectorXd>& x_star,
                         double* mean, Eigen::VectorXd* grad) const;

  int m() const { return static_cast<int>(x_m_.rows()); }
  int dim() const { return static_cast<int>(x_m_.cols()); }
  const KernelHyperparams& hyp() const { return hyp_; }
  const Eigen::MatrixXd& inducing_inputs() const { return x_m_; }
  const Eigen::VectorXd& mu() const { return mu_; }
  const Eigen::MatrixXd& a_cov() const { return a_cov_; }
  double data_mean() const { return data_mean_; }
  double delta_v() const { return delta_v_; }
  void set_delta_v(double dv) { delta_v_ = dv; }
  bool trained() const { return x_m_.rows() > 0; }

  // Number of numerically negative predictive variances clamped to zero.
  std::int64_t negative_variance_count() const;

 private:
  KernelHyperparams hyp_;
  Eigen::MatrixXd x_m_;
  Eigen::VectorXd mu_;
  Eigen::MatrixXd a_cov_;
  double data_mean_ = 0.0;
  double delta_v_ = 0.0;

  // Prediction caches, rebuilt in the constructor (and hence on load).
  Eigen::MatrixXd chol_kmm_;
  Eigen::VectorXd w_pred_;  // K_mm^{-1} mu

  std::shared_ptr<std::atomic<std::int64_t>> negative_variance_counter_ =
      std::make_shared<std::atomic<std::int64_t>>(0);
};

// Weighted k-means initialization of the inducing inputs. With bias > 0 the
// sample weights are exp(-|v_i| / bias), concentrating centers in the
// low-velocity region; bias = 0 gives uniform weights.
Eigen::MatrixXd select_inducing_points(const GpDataset& data, int m,
                                       double bias, std::uint64_t seed);

struct SgpTrainOptions {
  int max_iters = 1000;
  double grad_tol = 1e-5;
  std::uint64_t seed = 0;
  double bias = 0.0;
  int exact_lml_max_n = 2000;  // compute the exact bound gap up to this n
};

struct SgpTrainResult {
  SgpModel model;
  ElboReport report;
  int iters = 0;
  std::vector<double> elbo_trace;  // accepted optimizer iterates
};

// Jointly ascends the collapsed bound over inducing locations and
// log-hyperparameters, then fixes x_m and computes mu/A.
SgpTrainResult train_sgp(const GpDataset& data, int m, double bias,
                         const KernelHyperparams& hyp_init,
                         const SgpTrainOptions& opts = {});

// The three per-axis residual models plus shared metadata.
struct SgpModelSet {
  std::array<SgpModel, 3> axes;
  double delta_v = 0.0;
  std::vector<std::uint64_t> train_row_hashes;
  std::uint64_t config_hash = 0;

  // Residual-rate prediction per axis for a commanded velocity.
  Eigen::Vector3d mean(const Eigen::Vector3d& v_bar) const;
  // Mean plus the diagonal Jacobian d g_i / d v_i (axes are independent).
  void mean_and_diag_jacobian(const Eigen::Vector3d& v_bar,
                              Eigen::Vector3d* mean,
                              Eigen::Vector3d* diag_jac) const;
  bool trained() const;
};

}  // namespace resnmpc
