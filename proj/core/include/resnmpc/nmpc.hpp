#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <limits>
#include <optional>
#include <vector>

#include "resnmpc/dynamics.hpp"
#include "resnmpc/sgp.hpp"
#include "resnmpc/types.hpp"

namespace resnmpc {

struct NmpcConfig {
  int N = 15;                       // horizon length
  double dt = 0.1;                  // shooting interval [s]
  Eigen::Vector4d Q{40.0, 40.0, 40.0, 4.0};  // state weights (p, yaw)
  Eigen::Vector4d R{2.0, 2.0, 2.0, 0.5};     // control weights (v, omega)
  double v_max = 1.5;               // per-axis velocity bound [m/s]
  double omega_max = 1.0;           // yaw-rate bound [rad/s]
  Eigen::Vector4d x_min =
      Eigen::Vector4d::Constant(-std::numeric_limits<double>::infinity());
  Eigen::Vector4d x_max =
      Eigen::Vector4d::Constant(std::numeric_limits<double>::infinity());
  double d_o = 1.0;                 // obstacle safe distance [m]
  int max_sqp_iters = 30;
  double kkt_tol = 1e-6;
  double obstacle_penalty = 1e4;    // L1 slack penalty rho
  double obstacle_row_margin = 2.0; // linearize rows with d_o - dist > -margin

  void validate() const;
};

struct Obstacle {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
};

enum class SolveStatus { kConverged, kMaxIterations, kInfeasibleQp };

// Decision vector layout: w = [u_0 .. u_{N-1}, x_0 .. x_N], 4 entries each.
int nmpc_num_vars(int horizon);
Eigen::Ref<const Eigen::Vector4d> nmpc_control(const Eigen::VectorXd& w, int i);
Eigen::Ref<const Eigen::Vector4d> nmpc_state(const Eigen::VectorXd& w, int horizon, int i);

struct NmpcSolution {
  Eigen::VectorXd w;
  int horizon = 0;
  double cost = 0.0;
  double kkt_residual = 0.0;
  int sqp_iters = 0;
  SolveStatus status = SolveStatus::kMaxIterations;
  double solve_time = 0.0;          // [s]
  double g1_inf_norm = 0.0;
  Eigen::VectorXd g2_values;        // one entry per (obstacle, horizon state)
  Eigen::VectorXd obstacle_slacks;  // positive parts of g2

  State state(int i) const;
  ControlInput control(int i) const;
};

// Reference window covering N+1 states and N controls.
struct ReferenceSlice {
  std::vector<State> states;
  std::vector<ControlInput> controls;
};

// Quadratic tracking cost with wrapped yaw errors; returns the value and the
// gradient with respect to w.
std::pair<double, Eigen::VectorXd> nmpc_cost(const ReferenceSlice& ref,
                                             const Eigen::VectorXd& w,
                                             const Eigen::Vector4d& q_diag,
                                             const Eigen::Vector4d& r_diag);

struct DefectEval {
  Eigen::VectorXd g1;                 // 4 (N+1) stacked defects
  std::vector<Eigen::Matrix4d> jac_x; // d f_d / d x at each interval
  std::vector<Eigen::Matrix4d> jac_u; // d f_d / d u at each interval

  Eigen::MatrixXd dense_jacobian(int horizon) const;
};

// g1(w): block 0 pins x_0 to x_current, block i is
// f_d(x_{i-1}, u_{i-1}, dt) - x_i under RK4; yaw differences wrapped.
DefectEval shooting_defects(const Eigen::VectorXd& w, const State& x_current,
                            const DynamicsModel& dynamics, double dt,
                            bool with_jacobians = true);

// g2(w): d_o - dist(center, p_i) per (obstacle, horizon state); entries <= 0
// are satisfied. The distance is smoothed as sqrt(s + 1e-9).
Eigen::VectorXd obstacle_constraints(const Eigen::VectorXd& w,
                                     const std::vector<Obstacle>& obstacles,
                                     double d_o);

// Multiple-shooting SQP with Gauss-Newton Hessian, exact equality/box
// handling via condensing, and L1-penalized obstacle slacks. Instances are
// single-threaded; distinct instances may run concurrently.
class NmpcSolver {
 public:
  explicit NmpcSolver(NmpcConfig cfg);

  // Emits one JSON-lines record per SQP iteration when set.
  void set_debug_stream(std::ostream* stream) { debug_stream_ = stream; }

  NmpcSolution solve(const State& x_current, const ReferenceSlice& ref,
                     const std::vector<Obstacle>& obstacles,
                     const SgpModelSet* residual_model = nullptr,
                     const NmpcSolution* warm_start = nullptr);

  // Shifts a previous solution one interval forward, repeating the last
  // control, for use as the next warm start.
  static NmpcSolution shift_warm_start(const NmpcSolution& sol);

  struct IterationRecord {
    int iter = 0;
    double cost = 0.0;
    double merit = 0.0;
    double kkt_residual = 0.0;
    double step_norm = 0.0;
    double alpha = 0.0;
    double nu = 0.0;
  };
  const std::vector<IterationRecord>& last_iterations() const {
    return iterations_;
  }
  const NmpcConfig& config() const { return cfg_; }

 private:
  NmpcConfig cfg_;
  std::ostream* debug_stream_ = nullptr;
  std::vector<IterationRecord> iterations_;
};

}  // namespace resnmpc
