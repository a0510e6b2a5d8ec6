#pragma once

#include <Eigen/Dense>
#include <vector>

#include "resnmpc/types.hpp"

namespace resnmpc {

struct ReferenceSample {
  double t = 0.0;
  State x;
  ControlInput u;
};

struct ReferenceTrajectory {
  std::vector<ReferenceSample> samples;
  double dt = 0.1;
  std::vector<Eigen::Vector3d> source_waypoints;

  Eigen::Vector3d goal() const { return samples.back().x.p; }
  double duration() const { return samples.empty() ? 0.0 : samples.back().t; }
};

// Samples a uniform cubic B-spline whose control points are the waypoints.
// Time allocation scales the parameter rate so the peak sampled speed equals
// min(v_max, natural peak). The yaw reference follows the horizontal velocity
// direction and u carries the body-frame spline derivative.
ReferenceTrajectory generate_reference(
    const std::vector<Eigen::Vector3d>& waypoints, double v_max, double dt);

}  // namespace resnmpc
