#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "resnmpc/kernel.hpp"
#include "resnmpc/nmpc.hpp"
#include "resnmpc/plant.hpp"

namespace resnmpc {

struct ReferenceGeneratorSpec {
  int count = 20;
  int waypoints_per_trajectory = 6;
  double min_spacing = 2.0;  // [m] between consecutive waypoints
  Eigen::Vector3d lo = Eigen::Vector3d(-10.0, -10.0, 0.5);
  Eigen::Vector3d hi = Eigen::Vector3d(10.0, 10.0, 4.5);
};

struct ReferenceSpec {
  std::vector<Eigen::Vector3d> waypoints;          // explicit, or
  std::optional<ReferenceGeneratorSpec> generator; // seeded random sets
  double v_max = 1.5;
  double dt = 0.1;
};

struct WorldSpec {
  int obstacle_count = 15;
  Eigen::Vector3d lo = Eigen::Vector3d(-10.0, -10.0, 0.0);
  Eigen::Vector3d hi = Eigen::Vector3d(10.0, 10.0, 5.0);
  double d_o = 1.0;
  double sensing_radius = 5.0;
  double endpoint_clearance = 2.0;  // keep obstacles away from start/goal
};

struct SgpSpec {
  int m = 30;
  double bias = 0.5;
  KernelHyperparams hyp_init{1.0, 0.5, 0.1};
  int max_iters = 400;
  int max_train_points = 4000;
};

struct LoopSpec {
  int max_steps = 2000;
  double deviation_threshold = 2.0;
  double goal_tolerance = 0.3;
  bool enable_regeneration = true;
};

// Experiment configuration binding all modules; loaded from JSON.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  PlantConfig plant;
  NmpcConfig nmpc;
  SgpSpec sgp;
  WorldSpec world;
  ReferenceSpec reference;
  LoopSpec loop;
  std::string out_dir = "out";

  void validate() const;
  // Hash of the canonical JSON form; stamped into output summaries.
  std::uint64_t config_hash() const;

  std::string to_json_string() const;
  static ExperimentConfig from_json_string(const std::string& text);
  static ExperimentConfig load(const std::string& path);
  void save(const std::string& path) const;
};

std::uint64_t fnv1a64(const std::string& text);

}  // namespace resnmpc
