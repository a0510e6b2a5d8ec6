#include "resnmpc/residual_dynamics.hpp"

#include <stdexcept>

#include "resnmpc/errors.hpp"

namespace resnmpc {

Eigen::Vector4d f_est(const State& x, const ControlInput& u,
                      const SgpModelSet& models, const ResidualSelector& sel,
                      double delta_v) {
  if (!models.trained()) throw SolverError("f_est: untrained residual model");
  if (!(delta_v > 0.0)) throw std::invalid_argument("f_est: delta_v must be > 0");
  Eigen::Vector4d dx = f_norm(x, u);
  if (!sel.B.isZero()) {
    dx += sel.B * (models.mean(u.v) * delta_v);
  }
  return dx;
}

AugmentedDynamics::AugmentedDynamics(const SgpModelSet* models,
                                     ResidualSelector sel, double delta_v)
    : models_(models), sel_(sel), delta_v_(delta_v) {
  if (models_ == nullptr || !models_->trained()) {
    throw SolverError("AugmentedDynamics: untrained residual model");
  }
  if (!(delta_v_ > 0.0)) {
    throw std::invalid_argument("AugmentedDynamics: delta_v must be > 0");
  }
}

AugmentedDynamics::AugmentedDynamics(const SgpModelSet* models)
    : AugmentedDynamics(models, ResidualSelector::position_rows(),
                        models != nullptr ? models->delta_v : 0.0) {}

Eigen::Vector4d AugmentedDynamics::deriv(const State& x,
                                         const ControlInput& u) const {
  return f_est(x, u, *models_, sel_, delta_v_);
}

void AugmentedDynamics::deriv_jacobians(const State& x, const ControlInput& u,
                                        Eigen::Matrix4d* jac_x,
                                        Eigen::Matrix4d* jac_u) const {
  f_norm_jacobians(x, u, jac_x, jac_u);
  if (jac_u != nullptr && !sel_.B.isZero()) {
    Eigen::Vector3d mean, diag;
    models_->mean_and_diag_jacobian(u.v, &mean, &diag);
    // Each residual axis depends on its own velocity component only.
    jac_u->topLeftCorner<4, 3>() += sel_.B * (delta_v_ * diag).asDiagonal();
  }
}

}  // namespace resnmpc
