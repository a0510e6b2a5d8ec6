#include "resnmpc/world.hpp"

#include <stdexcept>

namespace resnmpc {

void WorldModel::validate() const {
  if (!(sensing_radius > 0.0)) {
    throw std::invalid_argument("WorldModel: sensing_radius must be > 0");
  }
  for (const Obstacle& o : obstacles) {
    if (!o.center.allFinite()) {
      throw std::invalid_argument("WorldModel: non-finite obstacle");
    }
  }
}

std::vector<Obstacle> visible_obstacles(const WorldModel& world,
                                        const Eigen::Vector3d& p) {
  std::vector<Obstacle> out;
  for (const Obstacle& o : world.obstacles) {
    if ((o.center - p).norm() <= world.sensing_radius) out.push_back(o);
  }
  return out;
}

}  // namespace resnmpc
