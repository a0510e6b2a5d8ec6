#include "resnmpc/pipeline.hpp"

#include <random>

#include "resnmpc/errors.hpp"
#include "resnmpc/threading.hpp"

namespace resnmpc {

std::vector<std::vector<Eigen::Vector3d>> generate_waypoint_sets(
    const ReferenceGeneratorSpec& spec, std::uint64_t seed) {
  if (spec.count < 1 || spec.waypoints_per_trajectory < 4) {
    throw ConfigError("reference generator: need count >= 1 and >= 4 waypoints");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(spec.lo.x(), spec.hi.x());
  std::uniform_real_distribution<double> uy(spec.lo.y(), spec.hi.y());
  std::uniform_real_distribution<double> uz(spec.lo.z(), spec.hi.z());

  std::vector<std::vector<Eigen::Vector3d>> sets;
  for (int t = 0; t < spec.count; ++t) {
    std::vector<Eigen::Vector3d> wps;
    int guard = 0;
    while (static_cast<int>(wps.size()) < spec.waypoints_per_trajectory) {
      const Eigen::Vector3d candidate(ux(rng), uy(rng), uz(rng));
      if (wps.empty() ||
          (candidate - wps.back()).norm() >= spec.min_spacing) {
        wps.push_back(candidate);
      }
      if (++guard > 10000) {
        throw ConfigError("reference generator: bounds too tight for spacing");
      }
    }
    sets.push_back(std::move(wps));
  }
  return sets;
}

WorldModel build_forest_world(const WorldSpec& spec, std::uint64_t seed,
                              const std::vector<Eigen::Vector3d>& keep_out) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(spec.lo.x(), spec.hi.x());
  std::uniform_real_distribution<double> uy(spec.lo.y(), spec.hi.y());
  std::uniform_real_distribution<double> uz(spec.lo.z(), spec.hi.z());

  WorldModel world;
  world.sensing_radius = spec.sensing_radius;
  int guard = 0;
  while (static_cast<int>(world.obstacles.size()) < spec.obstacle_count) {
    const Eigen::Vector3d candidate(ux(rng), uy(rng), uz(rng));
    bool clear = true;
    for (const Eigen::Vector3d& k : keep_out) {
      if ((candidate - k).norm() < spec.endpoint_clearance) clear = false;
    }
    if (clear) world.obstacles.push_back({candidate});
    if (++guard > 100000) {
      throw ConfigError("world: bounds too tight for obstacle count");
    }
  }
  return world;
}

ClosedLoopOptions loop_options(const ExperimentConfig& cfg) {
  ClosedLoopOptions opts;
  opts.max_steps = cfg.loop.max_steps;
  opts.enable_regeneration = cfg.loop.enable_regeneration;
  opts.deviation_threshold = cfg.loop.deviation_threshold;
  opts.goal_tolerance = cfg.loop.goal_tolerance;
  opts.v_max = cfg.reference.v_max;
  return opts;
}

std::vector<RunLog> run_batch(const ExperimentConfig& cfg,
                              const std::vector<ReferenceTrajectory>& refs,
                              bool with_obstacles, const SgpModelSet* models) {
  const NmpcConfig& nmpc_cfg = cfg.nmpc;
  const ClosedLoopOptions opts = loop_options(cfg);

  std::vector<RunLog> logs(refs.size());
  parallel_for(static_cast<int>(refs.size()), [&](int i) {
    const ReferenceTrajectory& ref = refs[i];
    WorldModel world;
    world.sensing_radius = cfg.world.sensing_radius;
    if (with_obstacles) {
      world = build_forest_world(
          cfg.world, cfg.seed + 7919 * static_cast<std::uint64_t>(i + 1),
          {ref.samples.front().x.p, ref.goal()});
    }
    world.goal = ref.goal();
    logs[i] = closed_loop_run(nmpc_cfg, world, ref, cfg.plant, models, opts);
  });
  return logs;
}

}  // namespace resnmpc
