#include "resnmpc/kernel.hpp"

#include <cmath>
#include <stdexcept>

namespace resnmpc {

Eigen::Vector3d KernelHyperparams::to_log() const {
  validate();
  return Eigen::Vector3d(std::log(sigma_f), std::log(length_scale),
                         std::log(sigma_n));
}

KernelHyperparams KernelHyperparams::from_log(const Eigen::Vector3d& lp) {
  KernelHyperparams h;
  h.sigma_f = std::exp(lp[0]);
  h.length_scale = std::exp(lp[1]);
  h.sigma_n = std::exp(lp[2]);
  return h;
}

void KernelHyperparams::validate(bool allow_zero_noise) const {
  if (!(sigma_f > 0.0) || !std::isfinite(sigma_f)) {
    throw std::invalid_argument("KernelHyperparams: sigma_f must be > 0");
  }
  if (!(length_scale > 0.0) || !std::isfinite(length_scale)) {
    throw std::invalid_argument("KernelHyperparams: length_scale must be > 0");
  }
  const bool noise_ok =
      allow_zero_noise ? (sigma_n >= 0.0) : (sigma_n > 0.0);
  if (!noise_ok || !std::isfinite(sigma_n)) {
    throw std::invalid_argument("KernelHyperparams: invalid sigma_n");
  }
}

double se_kernel(const Eigen::Ref<const Eigen::VectorXd>& x1,
                 const Eigen::Ref<const Eigen::VectorXd>& x2,
                 const KernelHyperparams& hyp) {
  const double r2 = (x1 - x2).squaredNorm();
  return hyp.sigma_f * hyp.sigma_f *
         std::exp(-0.5 * r2 / (hyp.length_scale * hyp.length_scale));
}

double se_kernel(double x1, double x2, const KernelHyperparams& hyp) {
  const double d = x1 - x2;
  return hyp.sigma_f * hyp.sigma_f *
         std::exp(-0.5 * d * d / (hyp.length_scale * hyp.length_scale));
}

Eigen::MatrixXd squared_distances(const Eigen::Ref<const Eigen::MatrixXd>& a,
                                  const Eigen::Ref<const Eigen::MatrixXd>& b) {
  const Eigen::VectorXd a2 = a.rowwise().squaredNorm();
  const Eigen::VectorXd b2 = b.rowwise().squaredNorm();
  Eigen::MatrixXd d2 = -2.0 * a * b.transpose();
  d2.colwise() += a2;
  d2.rowwise() += b2.transpose();
  return d2.cwiseMax(0.0);
}

Eigen::MatrixXd se_kernel_matrix(const Eigen::Ref<const Eigen::MatrixXd>& a,
                                 const Eigen::Ref<const Eigen::MatrixXd>& b,
                                 const KernelHyperparams& hyp) {
  const double sf2 = hyp.sigma_f * hyp.sigma_f;
  const double inv2l2 = 0.5 / (hyp.length_scale * hyp.length_scale);
  return sf2 * (-inv2l2 * squared_distances(a, b)).array().exp();
}

std::pair<int, int> find_duplicate_rows(
    const Eigen::Ref<const Eigen::MatrixXd>& points) {
  const int n = static_cast<int>(points.rows());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if ((points.row(i) - points.row(j)).cwiseAbs().maxCoeff() == 0.0) {
        return {i, j};
      }
    }
  }
  return {-1, -1};
}

}  // namespace resnmpc
