#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "resnmpc/nmpc.hpp"
#include "resnmpc/plant.hpp"
#include "resnmpc/reference.hpp"
#include "resnmpc/sgp.hpp"
#include "resnmpc/world.hpp"

namespace resnmpc {

struct StepRecord {
  double t = 0.0;
  State x;               // state when the control was computed
  ControlInput u_applied;
  State x_pred_next;     // first predicted state of the NMPC solution
  State x_actual_next;   // plant state after applying the control
  Eigen::Vector3d vhat_body = Eigen::Vector3d::Zero();  // plant velocity at step end
  double solve_time = 0.0;
  int sqp_iters = 0;
  bool regenerated = false;
  SolveStatus solve_status = SolveStatus::kConverged;
};

struct RunLog {
  std::vector<StepRecord> steps;
  double dt = 0.1;
  bool goal_reached = false;
  bool unreachable = false;
  int regen_count = 0;
  double rmse_position = 0.0;      // vs the tracked reference samples
  double traversed_distance = 0.0;
  double min_clearance = std::numeric_limits<double>::infinity();

  void write_csv(std::ostream& os) const;
  static RunLog read_csv(std::istream& is);
};

struct RegenerationResult {
  ReferenceTrajectory trajectory;
  bool regenerated = false;
};

// Emits a fresh reference from the current pose to the goal when the pose
// has drifted from the tracked sample beyond the threshold, detouring
// laterally around the currently visible obstacles by d_o + margin.
RegenerationResult maybe_regenerate(const ReferenceTrajectory& ref,
                                    const State& x_actual, double threshold,
                                    const WorldModel& world,
                                    int tracked_index, double d_o,
                                    double margin, double v_max);

struct ClosedLoopOptions {
  int max_steps = 2000;
  bool enable_regeneration = true;
  double deviation_threshold = 2.0;  // [m]
  double goal_tolerance = 0.3;       // [m]
  double regen_margin = 0.5;         // lateral clearance beyond d_o [m]
  int max_stagnant_regens = 5;
  double regen_progress_min = 0.5;   // [m] toward goal between regenerations
  double v_max = 1.5;                // for regenerated references
  std::ostream* solver_debug_stream = nullptr;  // JSON-lines SQP diagnostics
};

// Receding-horizon loop: slice the reference, sense obstacles, solve NMPC
// (warm started), step the plant, and regenerate the reference on large
// deviation. Terminates at the goal, on max_steps, or when flagged
// unreachable.
RunLog closed_loop_run(const NmpcConfig& cfg, const WorldModel& world,
                       const ReferenceTrajectory& ref, const PlantConfig& plant,
                       const SgpModelSet* models, const ClosedLoopOptions& opts);

}  // namespace resnmpc
