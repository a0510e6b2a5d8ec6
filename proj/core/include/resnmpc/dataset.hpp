#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "resnmpc/gp.hpp"
#include "resnmpc/kernel.hpp"
#include "resnmpc/nmpc.hpp"
#include "resnmpc/sgp.hpp"
#include "resnmpc/simulation.hpp"

namespace resnmpc {

// One velocity-residual sample: y = (vhat - vbar) / delta, exactly.
struct ResidualRow {
  Eigen::Vector3d vbar = Eigen::Vector3d::Zero();  // commanded [m/s]
  Eigen::Vector3d vhat = Eigen::Vector3d::Zero();  // measured [m/s]
  double delta = 0.1;                              // [s]
  Eigen::Vector3d y = Eigen::Vector3d::Zero();     // residual rate
  int traj_id = 0;
};

struct ResidualDataset {
  std::vector<ResidualRow> rows;

  int n() const { return static_cast<int>(rows.size()); }
  // Scalar per-axis view: X = commanded velocity, y = residual rate
  // (centered by GpDataset).
  GpDataset axis_view(int axis) const;
  std::vector<std::uint64_t> row_hashes() const;

  void write_csv(std::ostream& os) const;
  static ResidualDataset read_csv(std::istream& is);
};

// One row per applied control across all logs.
ResidualDataset collect(const std::vector<RunLog>& run_logs);

// Whole trajectories are assigned to one side; deterministic under the seed.
std::pair<ResidualDataset, ResidualDataset> split_by_trajectory(
    const ResidualDataset& dataset, double train_fraction, std::uint64_t seed);

struct RmseReport {
  double nominal_rmse = 0.0;    // RMSE of y * delta [m/s]
  double augmented_rmse = 0.0;  // RMSE of (y - g(vbar)) * delta [m/s]
  Eigen::Vector3d nominal_axis = Eigen::Vector3d::Zero();
  Eigen::Vector3d augmented_axis = Eigen::Vector3d::Zero();
  int n_points = 0;
  std::string scenario;  // "with_obstacles" or "without_obstacles"
};

// Errors when the dataset shares rows with the model's training set.
RmseReport nominal_and_augmented_errors(const ResidualDataset& dataset,
                                        const SgpModelSet& models);

struct TrainedModelSet {
  SgpModelSet set;
  std::array<ElboReport, 3> reports;
};

struct SgpTrainConfig {
  int m = 30;
  double bias = 0.5;
  KernelHyperparams hyp_init{1.0, 0.5, 0.1};
  int max_iters = 400;
  int max_train_points = 0;  // 0 = use all rows; otherwise seeded subsample
};

// Per-axis sparse training over the dataset; delta_v and the training-row
// fingerprint are recorded on the returned set.
TrainedModelSet train_model_set(const ResidualDataset& train,
                                const SgpTrainConfig& cfg, std::uint64_t seed);

struct SweepRow {
  int m = 0;
  double augmented_rmse = 0.0;
  double median_solve_time = 0.0;  // [s]
};

// Per inducing count: train, evaluate on the held-out set, and time a fixed
// NMPC scenario (50 solves) with the trained model in the loop.
std::vector<SweepRow> sweep_inducing_points(const ResidualDataset& train,
                                            const ResidualDataset& test,
                                            const std::vector<int>& m_values,
                                            const NmpcConfig& nmpc_cfg,
                                            const SgpTrainConfig& train_cfg,
                                            std::uint64_t seed);

}  // namespace resnmpc
