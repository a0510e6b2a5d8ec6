#pragma once

#include <Eigen/Dense>
#include <type_traits>

#include "resnmpc/types.hpp"

namespace resnmpc {

// World-from-body rotation about the z axis.
Eigen::Matrix3d yaw_rotation(double alpha);

// Nominal 4-DOF kinematics: [R_yaw(alpha) * v ; omega].
// Throws std::domain_error on non-finite input.
Eigen::Vector4d f_norm(const State& x, const ControlInput& u);

// Partials of f_norm with respect to the state vector (p, alpha) and the
// control vector (v, omega).
void f_norm_jacobians(const State& x, const ControlInput& u,
                      Eigen::Matrix4d* jac_x, Eigen::Matrix4d* jac_u);

// Continuous-time model with analytic Jacobians; the NMPC transcription and
// the RK4 sensitivity propagation work against this interface.
class DynamicsModel {
 public:
  virtual ~DynamicsModel() = default;
  virtual Eigen::Vector4d deriv(const State& x, const ControlInput& u) const = 0;
  virtual void deriv_jacobians(const State& x, const ControlInput& u,
                               Eigen::Matrix4d* jac_x,
                               Eigen::Matrix4d* jac_u) const = 0;
};

class NominalDynamics final : public DynamicsModel {
 public:
  Eigen::Vector4d deriv(const State& x, const ControlInput& u) const override;
  void deriv_jacobians(const State& x, const ControlInput& u,
                       Eigen::Matrix4d* jac_x,
                       Eigen::Matrix4d* jac_u) const override;
};

// Classical four-stage RK4 update with u held constant over the step.
// The returned state has its yaw renormalized.
template <typename F>
  requires std::is_invocable_r_v<Eigen::Vector4d, F, const State&,
                                 const ControlInput&>
State rk4_step(F&& f, const State& x, const ControlInput& u, double dt) {
  const Eigen::Vector4d x0 = x.to_vector();
  const Eigen::Vector4d k1 = f(x, u);
  State s2{x0.head<3>() + 0.5 * dt * k1.head<3>(), x0[3] + 0.5 * dt * k1[3]};
  const Eigen::Vector4d k2 = f(s2, u);
  State s3{x0.head<3>() + 0.5 * dt * k2.head<3>(), x0[3] + 0.5 * dt * k2[3]};
  const Eigen::Vector4d k3 = f(s3, u);
  State s4{x0.head<3>() + dt * k3.head<3>(), x0[3] + dt * k3[3]};
  const Eigen::Vector4d k4 = f(s4, u);
  return State::from_vector(x0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

State rk4_step(const DynamicsModel& model, const State& x,
               const ControlInput& u, double dt);

struct Rk4StepWithJacobians {
  State x_next;
  Eigen::Matrix4d jac_x;  // d x_next / d x
  Eigen::Matrix4d jac_u;  // d x_next / d u
};

// RK4 step together with the exact discrete sensitivities, obtained by
// chaining the stage Jacobians.
Rk4StepWithJacobians rk4_step_with_jacobians(const DynamicsModel& model,
                                             const State& x,
                                             const ControlInput& u, double dt);

}  // namespace resnmpc
