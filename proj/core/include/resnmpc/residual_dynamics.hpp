#pragma once

#include <Eigen/Dense>

#include "resnmpc/dynamics.hpp"
#include "resnmpc/sgp.hpp"
#include "resnmpc/types.hpp"

namespace resnmpc {

// Residual-augmented model: f_norm(x, u) + B (g(v) * delta_v). The residual
// models predict a velocity-residual rate from the commanded velocity; the
// recorded delta_v converts it into a velocity correction on the selected
// rows.
Eigen::Vector4d f_est(const State& x, const ControlInput& u,
                      const SgpModelSet& models, const ResidualSelector& sel,
                      double delta_v);

class AugmentedDynamics final : public DynamicsModel {
 public:
  AugmentedDynamics(const SgpModelSet* models, ResidualSelector sel,
                    double delta_v);
  // Uses the delta_v recorded in the model set and the canonical selector.
  explicit AugmentedDynamics(const SgpModelSet* models);

  Eigen::Vector4d deriv(const State& x, const ControlInput& u) const override;
  void deriv_jacobians(const State& x, const ControlInput& u,
                       Eigen::Matrix4d* jac_x,
                       Eigen::Matrix4d* jac_u) const override;

 private:
  const SgpModelSet* models_;
  ResidualSelector sel_;
  double delta_v_;
};

}  // namespace resnmpc
