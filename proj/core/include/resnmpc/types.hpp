#pragma once

#include <Eigen/Dense>

namespace resnmpc {

inline constexpr double kPi = 3.14159265358979323846;

// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

// 4-DOF kinematic state: world-frame position plus yaw.
struct State {
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  double alpha = 0.0;

  Eigen::Vector4d to_vector() const;
  // Normalizes yaw into (-pi, pi].
  static State from_vector(const Eigen::Vector4d& v);
  bool is_finite() const;
};

// Velocity command: body-frame linear velocity plus yaw rate.
struct ControlInput {
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  double omega = 0.0;

  Eigen::Vector4d to_vector() const;
  static ControlInput from_vector(const Eigen::Vector4d& v);
  bool is_finite() const;
};

// Input fed to the residual model: the commanded linear velocity.
using GpInputVector = Eigen::Vector3d;

// Maps the residual-model outputs onto state-derivative rows.
struct ResidualSelector {
  Eigen::Matrix<double, 4, 3> B = Eigen::Matrix<double, 4, 3>::Zero();

  // Canonical selector: residual axes land on the position-derivative rows.
  static ResidualSelector position_rows();
  // Zero matrix; annihilates the residual.
  static ResidualSelector none();

  // True when every entry is 0/1 and each column has at most one nonzero.
  bool is_valid() const;
};

}  // namespace resnmpc
