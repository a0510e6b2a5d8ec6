#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "resnmpc/config.hpp"
#include "resnmpc/dataset.hpp"
#include "resnmpc/reference.hpp"
#include "resnmpc/simulation.hpp"
#include "resnmpc/world.hpp"

namespace resnmpc {

// Seeded random waypoint sets within the generator bounds, spaced at least
// min_spacing apart.
std::vector<std::vector<Eigen::Vector3d>> generate_waypoint_sets(
    const ReferenceGeneratorSpec& spec, std::uint64_t seed);

// Seeded random point-obstacle forest inside the world bounds, keeping
// endpoint_clearance around the given keep-out points.
WorldModel build_forest_world(const WorldSpec& spec, std::uint64_t seed,
                              const std::vector<Eigen::Vector3d>& keep_out);

ClosedLoopOptions loop_options(const ExperimentConfig& cfg);

// Closed-loop runs over all references, fanned out over worker threads.
// Worlds are per-reference (obstacles sampled around that trajectory).
std::vector<RunLog> run_batch(const ExperimentConfig& cfg,
                              const std::vector<ReferenceTrajectory>& refs,
                              bool with_obstacles, const SgpModelSet* models);

}  // namespace resnmpc
