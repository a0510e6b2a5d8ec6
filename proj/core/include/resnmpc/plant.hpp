#pragma once

#include <Eigen/Dense>

#include "resnmpc/types.hpp"

namespace resnmpc {

// Synthetic truth model standing in for the real vehicle: a first-order
// velocity lag plus quadratic drag on top of the 4-DOF kinematics.
struct PlantConfig {
  double tau = 0.3;      // velocity lag time constant [s]
  double c_d = 0.1;      // quadratic drag coefficient [1/m]
  double dt_sim = 0.01;  // inner simulation step [s]

  // Throws std::invalid_argument when tau <= 0, c_d < 0 or dt_sim <= 0.
  void validate() const;
};

struct PlantState {
  State x;                                     // pose (position + yaw)
  Eigen::Vector3d v = Eigen::Vector3d::Zero(); // body-frame true velocity
};

// Integrates the plant over dt (which must be an integer multiple of
// dt_sim):
//   v_dot = (u.v - v)/tau - c_d * |v| * v
//   p_dot = R_yaw(alpha) * v,  alpha_dot = u.omega
// Stiff lags (tau << dt_sim) are handled by internal micro-substepping.
PlantState plant_step(const PlantConfig& cfg, const PlantState& s,
                      const ControlInput& u, double dt);

}  // namespace resnmpc
