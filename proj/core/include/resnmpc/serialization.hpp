#pragma once

#include <cstdint>
#include <string>

#include "resnmpc/dataset.hpp"
#include "resnmpc/gp.hpp"
#include "resnmpc/sgp.hpp"
#include "resnmpc/simulation.hpp"

namespace resnmpc {

// Sparse model bundle: sgp_x/y/z.json plus bundle.json (delta_v, training
// fingerprint, config hash, per-axis bound reports). Values are written as
// decimal text with shortest-round-trip precision.
void save_model_set(const std::string& dir, const TrainedModelSet& trained,
                    std::uint64_t config_hash);
TrainedModelSet load_model_set(const std::string& dir);

// Exact GP: hyperparameters, training inputs, cached weights and the data
// mean; the factorization is rebuilt on load.
void save_exact_gp(const std::string& path, const ExactGpModel& model);
ExactGpModel load_exact_gp(const std::string& path);

void save_rmse_report(const std::string& path, const RmseReport& report,
                      std::uint64_t config_hash);

void save_run_summary(const std::string& path, const RunLog& log,
                      std::uint64_t config_hash);

void save_sweep_csv(const std::string& path,
                    const std::vector<SweepRow>& table);

// Reference samples as CSV: t,px,py,pz,alpha,vx,vy,vz,omega.
void save_reference_csv(const std::string& path,
                        const ReferenceTrajectory& ref);
ReferenceTrajectory load_reference_csv(const std::string& path);

}  // namespace resnmpc
