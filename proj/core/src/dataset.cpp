#include "resnmpc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "resnmpc/errors.hpp"
#include "resnmpc/threading.hpp"

namespace resnmpc {

namespace {

const char* const kDatasetHeader =
    "vbar_x,vbar_y,vbar_z,vhat_x,vhat_y,vhat_z,delta,y_x,y_y,y_z";

std::uint64_t fnv1a_append(std::uint64_t h, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  for (int i = 0; i < 8; ++i) {
    h ^= (bits >> (8 * i)) & 0xffULL;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t hash_row(const ResidualRow& r) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (int a = 0; a < 3; ++a) h = fnv1a_append(h, r.vbar[a]);
  for (int a = 0; a < 3; ++a) h = fnv1a_append(h, r.vhat[a]);
  h = fnv1a_append(h, r.delta);
  for (int a = 0; a < 3; ++a) h = fnv1a_append(h, r.y[a]);
  return h;
}

}  // namespace

GpDataset ResidualDataset::axis_view(int axis) const {
  if (axis < 0 || axis > 2) {
    throw std::invalid_argument("ResidualDataset: axis must be 0..2");
  }
  if (rows.empty()) throw DataError("ResidualDataset: empty dataset");
  Eigen::MatrixXd x(n(), 1);
  Eigen::VectorXd y(n());
  for (int i = 0; i < n(); ++i) {
    x(i, 0) = rows[i].vbar[axis];
    y[i] = rows[i].y[axis];
  }
  return GpDataset::from_raw(std::move(x), std::move(y));
}

std::vector<std::uint64_t> ResidualDataset::row_hashes() const {
  std::vector<std::uint64_t> hashes;
  hashes.reserve(rows.size());
  for (const ResidualRow& r : rows) hashes.push_back(hash_row(r));
  return hashes;
}

void ResidualDataset::write_csv(std::ostream& os) const {
  os << kDatasetHeader << "\n";
  os.precision(17);
  for (const ResidualRow& r : rows) {
    os << r.vbar.x() << ',' << r.vbar.y() << ',' << r.vbar.z() << ','
       << r.vhat.x() << ',' << r.vhat.y() << ',' << r.vhat.z() << ','
       << r.delta << ',' << r.y.x() << ',' << r.y.y() << ',' << r.y.z()
       << "\n";
  }
}

ResidualDataset ResidualDataset::read_csv(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw DataError("dataset: empty stream");
  if (header != kDatasetHeader) {
    throw DataError("dataset: unexpected header: " + header);
  }
  ResidualDataset ds;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<double> f;
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(std::stod(cell));
    if (f.size() != 10) {
      throw DataError("dataset: expected 10 columns, got " +
                      std::to_string(f.size()));
    }
    ResidualRow r;
    r.vbar = Eigen::Vector3d(f[0], f[1], f[2]);
    r.vhat = Eigen::Vector3d(f[3], f[4], f[5]);
    r.delta = f[6];
    r.y = Eigen::Vector3d(f[7], f[8], f[9]);
    if (!(r.delta > 0.0)) throw DataError("dataset: delta must be > 0");
    ds.rows.push_back(r);
  }
  return ds;
}

ResidualDataset collect(const std::vector<RunLog>& run_logs) {
  ResidualDataset ds;
  int traj_id = 0;
  for (const RunLog& log : run_logs) {
    if (!(log.dt > 0.0)) throw DataError("collect: run log with dt <= 0");
    for (const StepRecord& s : log.steps) {
      ResidualRow r;
      r.vbar = s.u_applied.v;
      r.vhat = s.vhat_body;
      r.delta = log.dt;
      r.y = (r.vhat - r.vbar) / r.delta;
      r.traj_id = traj_id;
      ds.rows.push_back(r);
    }
    ++traj_id;
  }
  return ds;
}

std::pair<ResidualDataset, ResidualDataset> split_by_trajectory(
    const ResidualDataset& dataset, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0) || !(train_fraction < 1.0)) {
    throw std::invalid_argument("split: train_fraction must be in (0, 1)");
  }
  std::set<int> ids;
  for (const ResidualRow& r : dataset.rows) ids.insert(r.traj_id);
  if (ids.size() < 2) {
    throw DataError("split: need at least two trajectories");
  }
  std::vector<int> order(ids.begin(), ids.end());
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const int n_train = std::clamp(
      static_cast<int>(std::lround(train_fraction * order.size())), 1,
      static_cast<int>(order.size()) - 1);
  std::set<int> train_ids(order.begin(), order.begin() + n_train);

  std::pair<ResidualDataset, ResidualDataset> out;
  for (const ResidualRow& r : dataset.rows) {
    (train_ids.count(r.traj_id) ? out.first : out.second).rows.push_back(r);
  }
  return out;
}

RmseReport nominal_and_augmented_errors(const ResidualDataset& dataset,
                                        const SgpModelSet& models) {
  if (dataset.rows.empty()) throw DataError("evaluate: empty dataset");
  if (!models.trained()) throw DataError("evaluate: untrained model set");

  if (!models.train_row_hashes.empty()) {
    const std::set<std::uint64_t> train_hashes(models.train_row_hashes.begin(),
                                               models.train_row_hashes.end());
    for (const ResidualRow& r : dataset.rows) {
      if (train_hashes.count(hash_row(r)) > 0) {
        throw DataError("evaluate: train/test overlap detected");
      }
    }
  }

  Eigen::Vector3d nom_sq = Eigen::Vector3d::Zero();
  Eigen::Vector3d aug_sq = Eigen::Vector3d::Zero();
  for (const ResidualRow& r : dataset.rows) {
    const Eigen::Vector3d g = models.mean(r.vbar);
    const Eigen::Vector3d nominal_err = r.y * r.delta;
    const Eigen::Vector3d augmented_err = (r.y - g) * r.delta;
    nom_sq += nominal_err.cwiseAbs2();
    aug_sq += augmented_err.cwiseAbs2();
  }
  const double n = static_cast<double>(dataset.n());
  RmseReport report;
  report.n_points = dataset.n();
  report.nominal_axis = (nom_sq / n).cwiseSqrt();
  report.augmented_axis = (aug_sq / n).cwiseSqrt();
  report.nominal_rmse = std::sqrt(nom_sq.sum() / (3.0 * n));
  report.augmented_rmse = std::sqrt(aug_sq.sum() / (3.0 * n));
  return report;
}

TrainedModelSet train_model_set(const ResidualDataset& train,
                                const SgpTrainConfig& cfg, std::uint64_t seed) {
  if (train.rows.empty()) throw DataError("train: empty dataset");

  ResidualDataset working = train;
  if (cfg.max_train_points > 0 && train.n() > cfg.max_train_points) {
    std::vector<int> idx(train.n());
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(cfg.max_train_points);
    std::sort(idx.begin(), idx.end());
    working.rows.clear();
    for (int i : idx) working.rows.push_back(train.rows[i]);
  }

  const double delta_v = working.rows.front().delta;
  for (const ResidualRow& r : working.rows) {
    if (std::abs(r.delta - delta_v) > 1e-12) {
      throw DataError("train: inconsistent delta across rows");
    }
  }

  TrainedModelSet out;
  parallel_for(3, [&](int axis) {
    const GpDataset data = working.axis_view(axis);
    SgpTrainOptions opts;
    opts.seed = seed + static_cast<std::uint64_t>(axis);
    opts.bias = cfg.bias;
    opts.max_iters = cfg.max_iters;
    const int m = std::min(cfg.m, data.n());

    // The signal/noise inits act relative to the per-axis target spread, so
    // one config covers axes with very different residual magnitudes.
    const double y_std = std::max(
        std::sqrt(data.y.squaredNorm() / data.n()), 1e-8);
    KernelHyperparams init = cfg.hyp_init;
    init.sigma_f *= y_std;
    init.sigma_n *= y_std;

    SgpTrainResult r = train_sgp(data, m, cfg.bias, init, opts);
    r.model.set_delta_v(delta_v);
    out.set.axes[axis] = std::move(r.model);
    out.reports[axis] = r.report;
  });
  out.set.delta_v = delta_v;
  out.set.train_row_hashes = working.row_hashes();
  return out;
}

std::vector<SweepRow> sweep_inducing_points(const ResidualDataset& train,
                                            const ResidualDataset& test,
                                            const std::vector<int>& m_values,
                                            const NmpcConfig& nmpc_cfg,
                                            const SgpTrainConfig& train_cfg,
                                            std::uint64_t seed) {
  if (!std::is_sorted(m_values.begin(), m_values.end())) {
    throw std::invalid_argument("sweep: m_values must be sorted ascending");
  }

  // Fixed timing scenario: straight-line slice with a displaced start.
  ReferenceSlice slice;
  for (int i = 0; i <= nmpc_cfg.N; ++i) {
    State s;
    s.p = Eigen::Vector3d(nmpc_cfg.dt * i, 0.0, 1.0);
    slice.states.push_back(s);
  }
  for (int i = 0; i < nmpc_cfg.N; ++i) {
    ControlInput u;
    u.v = Eigen::Vector3d(1.0, 0.0, 0.0);
    slice.controls.push_back(u);
  }
  State x0 = slice.states[0];
  x0.p += Eigen::Vector3d(-0.05, 0.08, -0.03);

  std::vector<SweepRow> table;
  for (int m : m_values) {
    SgpTrainConfig cfg_m = train_cfg;
    cfg_m.m = m;
    const TrainedModelSet trained = train_model_set(train, cfg_m, seed);
    const RmseReport report = nominal_and_augmented_errors(test, trained.set);

    std::vector<double> times;
    NmpcSolver solver(nmpc_cfg);
    for (int rep = 0; rep < 50; ++rep) {
      const NmpcSolution sol = solver.solve(x0, slice, {}, &trained.set);
      times.push_back(sol.solve_time);
    }
    std::nth_element(times.begin(), times.begin() + times.size() / 2,
                     times.end());
    SweepRow row;
    row.m = m;
    row.augmented_rmse = report.augmented_rmse;
    row.median_solve_time = times[times.size() / 2];
    table.push_back(row);
  }
  return table;
}

}  // namespace resnmpc
