#pragma once

#include <Eigen/Dense>
#include <vector>

#include "resnmpc/nmpc.hpp"

namespace resnmpc {

// Known point-obstacle world with a limited sensing radius standing in for
// an incrementally built map.
struct WorldModel {
  std::vector<Obstacle> obstacles;
  double sensing_radius = 5.0;
  Eigen::Vector3d goal = Eigen::Vector3d::Zero();

  void validate() const;
};

// Obstacles within the closed sensing ball around p.
std::vector<Obstacle> visible_obstacles(const WorldModel& world,
                                        const Eigen::Vector3d& p);

}  // namespace resnmpc
