#pragma once

#include <Eigen/Dense>

namespace resnmpc {

// Squared-exponential kernel hyperparameters. All three are strictly
// positive; optimization happens over their logs.
struct KernelHyperparams {
  double sigma_f = 1.0;      // signal standard deviation
  double length_scale = 1.0; // input length scale
  double sigma_n = 0.1;      // observation-noise standard deviation

  Eigen::Vector3d to_log() const;
  static KernelHyperparams from_log(const Eigen::Vector3d& log_params);

  // allow_zero_noise relaxes sigma_n > 0 to sigma_n >= 0 (fit-time only).
  void validate(bool allow_zero_noise = false) const;
};

// k(x1, x2) = sigma_f^2 exp(-|x1 - x2|^2 / (2 l^2)). The sigma_n^2 I term is
// applied on the training Gram diagonal only, never in cross-covariances.
double se_kernel(const Eigen::Ref<const Eigen::VectorXd>& x1,
                 const Eigen::Ref<const Eigen::VectorXd>& x2,
                 const KernelHyperparams& hyp);
double se_kernel(double x1, double x2, const KernelHyperparams& hyp);

// Pairwise squared Euclidean distances between the rows of a and b.
Eigen::MatrixXd squared_distances(const Eigen::Ref<const Eigen::MatrixXd>& a,
                                  const Eigen::Ref<const Eigen::MatrixXd>& b);

// Noise-free kernel matrix between the rows of a and b.
Eigen::MatrixXd se_kernel_matrix(const Eigen::Ref<const Eigen::MatrixXd>& a,
                                 const Eigen::Ref<const Eigen::MatrixXd>& b,
                                 const KernelHyperparams& hyp);

// Returns {row, col} of an exactly duplicated pair of rows, or {-1, -1}.
std::pair<int, int> find_duplicate_rows(
    const Eigen::Ref<const Eigen::MatrixXd>& points);

}  // namespace resnmpc
