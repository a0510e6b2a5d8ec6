#include "resnmpc/dynamics.hpp"

#include <cmath>
#include <stdexcept>

namespace resnmpc {

Eigen::Matrix3d yaw_rotation(double alpha) {
  const double c = std::cos(alpha);
  const double s = std::sin(alpha);
  Eigen::Matrix3d r;
  r << c, -s, 0.0,  //
      s, c, 0.0,    //
      0.0, 0.0, 1.0;
  return r;
}

Eigen::Vector4d f_norm(const State& x, const ControlInput& u) {
  if (!x.is_finite() || !u.is_finite()) {
    throw std::domain_error("f_norm: non-finite state or control");
  }
  Eigen::Vector4d dx;
  dx.head<3>() = yaw_rotation(x.alpha) * u.v;
  dx[3] = u.omega;
  return dx;
}

void f_norm_jacobians(const State& x, const ControlInput& u,
                      Eigen::Matrix4d* jac_x, Eigen::Matrix4d* jac_u) {
  const double c = std::cos(x.alpha);
  const double s = std::sin(x.alpha);
  if (jac_x != nullptr) {
    jac_x->setZero();
    // Only the yaw column is nonzero: d(R(alpha) v)/d alpha.
    (*jac_x)(0, 3) = -s * u.v.x() - c * u.v.y();
    (*jac_x)(1, 3) = c * u.v.x() - s * u.v.y();
  }
  if (jac_u != nullptr) {
    jac_u->setZero();
    jac_u->topLeftCorner<3, 3>() = yaw_rotation(x.alpha);
    (*jac_u)(3, 3) = 1.0;
  }
}

Eigen::Vector4d NominalDynamics::deriv(const State& x,
                                       const ControlInput& u) const {
  return f_norm(x, u);
}

void NominalDynamics::deriv_jacobians(const State& x, const ControlInput& u,
                                      Eigen::Matrix4d* jac_x,
                                      Eigen::Matrix4d* jac_u) const {
  f_norm_jacobians(x, u, jac_x, jac_u);
}

State rk4_step(const DynamicsModel& model, const State& x,
               const ControlInput& u, double dt) {
  return rk4_step([&model](const State& s, const ControlInput& c) { return model.deriv(s, c); },
                  x, u, dt);
}

Rk4StepWithJacobians rk4_step_with_jacobians(const DynamicsModel& model,
                                             const State& x,
                                             const ControlInput& u,
                                             double dt) {
  const Eigen::Vector4d x0 = x.to_vector();

  Eigen::Vector4d k[4];
  Eigen::Matrix4d dk_dx[4];
  Eigen::Matrix4d dk_du[4];

  const double stage_scale[4] = {0.0, 0.5, 0.5, 1.0};
  Eigen::Vector4d stage_x = x0;
  for (int i = 0; i < 4; ++i) {
    if (i > 0) stage_x = x0 + stage_scale[i] * dt * k[i - 1];
    const State si{stage_x.head<3>(), stage_x[3]};
    k[i] = model.deriv(si, u);
    Eigen::Matrix4d fx, fu;
    model.deriv_jacobians(si, u, &fx, &fu);
    if (i == 0) {
      dk_dx[i] = fx;
      dk_du[i] = fu;
    } else {
      const double h = stage_scale[i] * dt;
      dk_dx[i] = fx * (Eigen::Matrix4d::Identity() + h * dk_dx[i - 1]);
      dk_du[i] = fu + fx * (h * dk_du[i - 1]);
    }
  }

  Rk4StepWithJacobians out;
  out.x_next = State::from_vector(
      x0 + (dt / 6.0) * (k[0] + 2.0 * k[1] + 2.0 * k[2] + k[3]));
  out.jac_x = Eigen::Matrix4d::Identity() +
              (dt / 6.0) * (dk_dx[0] + 2.0 * dk_dx[1] + 2.0 * dk_dx[2] + dk_dx[3]);
  out.jac_u = (dt / 6.0) * (dk_du[0] + 2.0 * dk_du[1] + 2.0 * dk_du[2] + dk_du[3]);
  return out;
}

}  // namespace resnmpc
