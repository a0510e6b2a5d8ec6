#include <cmath>
#include <sstream>

#include "doctest.h"
#include "resnmpc/dataset.hpp"
#include "resnmpc/errors.hpp"
#include "resnmpc/reference.hpp"
#include "resnmpc/simulation.hpp"
#include "resnmpc/world.hpp"

using namespace resnmpc;

namespace {

std::vector<Eigen::Vector3d> line_waypoints(double length, int count) {
  std::vector<Eigen::Vector3d> wps;
  for (int i = 0; i < count; ++i) {
    wps.push_back(Eigen::Vector3d(length * i / (count - 1.0), 0.0, 1.0));
  }
  return wps;
}

NmpcConfig test_nmpc_config() {
  NmpcConfig cfg;
  cfg.N = 15;
  cfg.dt = 0.1;
  return cfg;
}

// Near-ideal plant: negligible lag, no drag.
PlantConfig matched_plant() {
  PlantConfig plant;
  plant.tau = 0.002;
  plant.c_d = 0.0;
  plant.dt_sim = 0.01;
  return plant;
}

PlantConfig drag_plant() {
  PlantConfig plant;
  plant.tau = 0.3;
  plant.c_d = 0.1;
  plant.dt_sim = 0.01;
  return plant;
}

}  // namespace

TEST_CASE("visible_obstacles uses a closed sensing ball") {
  WorldModel world;
  world.sensing_radius = 5.0;
  world.obstacles = {{Eigen::Vector3d(2, 0, 0)},
                     {Eigen::Vector3d(4, 0, 0)},
                     {Eigen::Vector3d(6, 0, 0)},
                     {Eigen::Vector3d(5, 0, 0)}};
  const auto near = visible_obstacles(world, Eigen::Vector3d::Zero());
  CHECK(near.size() == 3);  // 2, 4 and exactly 5 m away

  WorldModel empty;
  CHECK(visible_obstacles(empty, Eigen::Vector3d::Zero()).empty());
}

TEST_CASE("maybe_regenerate below threshold returns the same trajectory") {
  const auto ref = generate_reference(line_waypoints(10.0, 6), 1.5, 0.1);
  WorldModel world;
  world.goal = ref.goal();
  const auto result =
      maybe_regenerate(ref, ref.samples[0].x, 2.0, world, 0, 1.0, 0.5, 1.5);
  CHECK_FALSE(result.regenerated);
  CHECK(result.trajectory.samples.size() == ref.samples.size());
}

TEST_CASE("maybe_regenerate emits a fresh trajectory from the actual pose") {
  const auto ref = generate_reference(line_waypoints(10.0, 6), 1.5, 0.1);
  WorldModel world;
  world.goal = ref.goal();
  State drifted;
  drifted.p = ref.samples[20].x.p + Eigen::Vector3d(0.0, 3.0, 0.0);
  const auto result =
      maybe_regenerate(ref, drifted, 2.0, world, 20, 1.0, 0.5, 1.5);
  CHECK(result.regenerated);
  CHECK((result.trajectory.samples.front().x.p - drifted.p).norm() < 1e-6);
  CHECK((result.trajectory.goal() - ref.goal()).norm() < 1e-6);
}

TEST_CASE("regenerated waypoints clear visible obstacles") {
  const auto ref = generate_reference(line_waypoints(12.0, 6), 1.5, 0.1);
  WorldModel world;
  world.goal = ref.goal();
  world.sensing_radius = 20.0;
  world.obstacles = {{Eigen::Vector3d(6.0, 0.0, 1.0)}};
  State drifted;
  drifted.p = Eigen::Vector3d(1.0, 2.5, 1.0);
  const auto result =
      maybe_regenerate(ref, drifted, 2.0, world, 10, 1.0, 0.5, 1.5);
  REQUIRE(result.regenerated);
  for (const auto& wp : result.trajectory.source_waypoints) {
    // Interior waypoints stay outside the safe zone (endpoint triplets are
    // at the pose/goal, both far from the obstacle here).
    CHECK((wp - world.obstacles[0].center).norm() > 0.99);
  }
}

TEST_CASE("model-matched tracking reaches the goal with tiny RMSE") {
  const auto ref = generate_reference(line_waypoints(6.0, 6), 1.2, 0.1);
  WorldModel world;
  world.goal = ref.goal();
  ClosedLoopOptions opts;
  opts.max_steps = 400;
  const RunLog log = closed_loop_run(test_nmpc_config(), world, ref,
                                     matched_plant(), nullptr, opts);
  CHECK(log.goal_reached);
  CHECK(log.rmse_position <= 0.01);
  CHECK(log.regen_count == 0);

  // Timestamps increase by dt; applied controls respect the box.
  for (size_t i = 0; i < log.steps.size(); ++i) {
    CHECK(log.steps[i].t == doctest::Approx(0.1 * i));
    CHECK(log.steps[i].u_applied.v.cwiseAbs().maxCoeff() <= 1.5 + 1e-12);
  }
}

TEST_CASE("drag plant tracks worse than the matched plant") {
  const auto ref = generate_reference(line_waypoints(6.0, 6), 1.2, 0.1);
  WorldModel world;
  world.goal = ref.goal();
  ClosedLoopOptions opts;
  opts.max_steps = 400;
  const RunLog matched = closed_loop_run(test_nmpc_config(), world, ref,
                                         matched_plant(), nullptr, opts);
  const RunLog dragged = closed_loop_run(test_nmpc_config(), world, ref,
                                         drag_plant(), nullptr, opts);
  CHECK(dragged.rmse_position > matched.rmse_position);
}

TEST_CASE("an obstacle on the path is cleared in closed loop") {
  const auto ref = generate_reference(line_waypoints(8.0, 6), 1.2, 0.1);
  WorldModel world;
  world.goal = ref.goal();
  world.obstacles = {{Eigen::Vector3d(4.0, 0.0, 1.0)}};
  NmpcConfig cfg = test_nmpc_config();
  cfg.d_o = 1.0;
  ClosedLoopOptions opts;
  opts.max_steps = 600;
  const RunLog log =
      closed_loop_run(cfg, world, ref, matched_plant(), nullptr, opts);
  CHECK(log.goal_reached);
  CHECK(log.min_clearance >= cfg.d_o - 1e-2);
}

TEST_CASE("stagnant regenerations raise the unreachable flag") {
  // A vehicle pinned by a zero control box can never progress: the tracked
  // sample walks away, every regeneration restarts from the same pose, and
  // the stagnation guard must flag the goal unreachable.
  const auto ref = generate_reference(line_waypoints(10.0, 6), 1.5, 0.1);
  WorldModel world;
  world.goal = ref.goal();

  NmpcConfig cfg = test_nmpc_config();
  cfg.v_max = 0.0;
  cfg.omega_max = 0.0;
  ClosedLoopOptions opts;
  opts.max_steps = 400;
  const RunLog log =
      closed_loop_run(cfg, world, ref, drag_plant(), nullptr, opts);
  CHECK(log.unreachable);
  CHECK_FALSE(log.goal_reached);
  CHECK(log.regen_count >= 5);
}

TEST_CASE("run log round-trips through CSV") {
  const auto ref = generate_reference(line_waypoints(3.0, 5), 1.2, 0.1);
  WorldModel world;
  world.goal = ref.goal();
  ClosedLoopOptions opts;
  opts.max_steps = 100;
  const RunLog log = closed_loop_run(test_nmpc_config(), world, ref,
                                     drag_plant(), nullptr, opts);
  REQUIRE(!log.steps.empty());

  std::stringstream ss;
  log.write_csv(ss);
  const RunLog parsed = RunLog::read_csv(ss);
  REQUIRE(parsed.steps.size() == log.steps.size());
  CHECK(parsed.dt == doctest::Approx(log.dt));
  for (size_t i = 0; i < log.steps.size(); ++i) {
    CHECK(parsed.steps[i].x.p == log.steps[i].x.p);
    CHECK(parsed.steps[i].vhat_body == log.steps[i].vhat_body);
    CHECK(parsed.steps[i].u_applied.omega == log.steps[i].u_applied.omega);
  }

  std::stringstream bad("t,x_px\n");
  CHECK_THROWS_AS(RunLog::read_csv(bad), DataError);
}
