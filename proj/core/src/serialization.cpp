#include "resnmpc/serialization.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "resnmpc/errors.hpp"

namespace resnmpc {

namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const int rows = static_cast<int>(j.size());
  if (rows == 0) return Eigen::MatrixXd(0, 0);
  const int cols = static_cast<int>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(static_cast<int>(j.size()));
  for (int i = 0; i < v.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

json sgp_model_to_json(const SgpModel& model) {
  json j;
  j["sigma_f"] = model.hyp().sigma_f;
  j["length_scale"] = model.hyp().length_scale;
  j["sigma_n"] = model.hyp().sigma_n;
  j["x_m"] = matrix_to_json(model.inducing_inputs());
  j["mu"] = vector_to_json(model.mu());
  j["a_cov"] = matrix_to_json(model.a_cov());
  j["data_mean"] = model.data_mean();
  j["delta_v"] = model.delta_v();
  return j;
}

SgpModel sgp_model_from_json(const json& j) {
  KernelHyperparams hyp;
  hyp.sigma_f = j.at("sigma_f").get<double>();
  hyp.length_scale = j.at("length_scale").get<double>();
  hyp.sigma_n = j.at("sigma_n").get<double>();
  return SgpModel(hyp, matrix_from_json(j.at("x_m")),
                  vector_from_json(j.at("mu")), matrix_from_json(j.at("a_cov")),
                  j.at("data_mean").get<double>(), j.at("delta_v").get<double>());
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw DataError("malformed JSON in '" + path + "': " + e.what());
  }
  return j;
}

}  // namespace

void save_model_set(const std::string& dir, const TrainedModelSet& trained,
                    std::uint64_t config_hash) {
  std::filesystem::create_directories(dir);
  const char* axis_names[3] = {"x", "y", "z"};
  for (int a = 0; a < 3; ++a) {
    write_json_file(dir + "/sgp_" + axis_names[a] + ".json",
                    sgp_model_to_json(trained.set.axes[a]));
  }
  json bundle;
  bundle["delta_v"] = trained.set.delta_v;
  bundle["config_hash"] = config_hash;
  bundle["train_row_hashes"] = trained.set.train_row_hashes;
  json reports = json::array();
  for (const ElboReport& r : trained.reports) {
    json jr;
    jr["elbo"] = r.elbo;
    if (r.exact_lml.has_value()) jr["exact_lml"] = *r.exact_lml;
    if (r.gap.has_value()) jr["gap"] = *r.gap;
    reports.push_back(jr);
  }
  bundle["elbo_reports"] = reports;
  write_json_file(dir + "/bundle.json", bundle);
}

TrainedModelSet load_model_set(const std::string& dir) {
  TrainedModelSet out;
  const char* axis_names[3] = {"x", "y", "z"};
  for (int a = 0; a < 3; ++a) {
    out.set.axes[a] =
        sgp_model_from_json(read_json_file(dir + "/sgp_" + axis_names[a] + ".json"));
  }
  const json bundle = read_json_file(dir + "/bundle.json");
  out.set.delta_v = bundle.at("delta_v").get<double>();
  out.set.config_hash = bundle.value("config_hash", 0ULL);
  if (bundle.contains("train_row_hashes")) {
    out.set.train_row_hashes =
        bundle["train_row_hashes"].get<std::vector<std::uint64_t>>();
  }
  if (bundle.contains("elbo_reports")) {
    int a = 0;
    for (const json& jr : bundle["elbo_reports"]) {
      if (a >= 3) break;
      ElboReport r;
      r.elbo = jr.at("elbo").get<double>();
      if (jr.contains("exact_lml")) r.exact_lml = jr["exact_lml"].get<double>();
      if (jr.contains("gap")) r.gap = jr["gap"].get<double>();
      out.reports[a++] = r;
    }
  }
  return out;
}

void save_exact_gp(const std::string& path, const ExactGpModel& model) {
  json j;
  j["sigma_f"] = model.hyp().sigma_f;
  j["length_scale"] = model.hyp().length_scale;
  j["sigma_n"] = model.hyp().sigma_n;
  j["X"] = matrix_to_json(model.data().X);
  j["alpha"] = vector_to_json(model.alpha_vec());
  j["data_mean"] = model.data().y_mean;
  write_json_file(path, j);
}

ExactGpModel load_exact_gp(const std::string& path) {
  const json j = read_json_file(path);
  KernelHyperparams hyp;
  hyp.sigma_f = j.at("sigma_f").get<double>();
  hyp.length_scale = j.at("length_scale").get<double>();
  hyp.sigma_n = j.at("sigma_n").get<double>();
  const Eigen::MatrixXd x = matrix_from_json(j.at("X"));
  const Eigen::VectorXd alpha = vector_from_json(j.at("alpha"));

  // The centered targets are recovered from the cached weights:
  // y = (K + sigma_n^2 I) alpha.
  Eigen::MatrixXd gram = se_kernel_matrix(x, x, hyp);
  gram.diagonal().array() += hyp.sigma_n * hyp.sigma_n;
  Eigen::VectorXd y = gram * alpha;

  GpDataset data;
  data.X = x;
  data.y = std::move(y);
  data.y_mean = j.at("data_mean").get<double>();
  return ExactGpModel::fit(std::move(data), hyp);
}

void save_rmse_report(const std::string& path, const RmseReport& report,
                      std::uint64_t config_hash) {
  json j;
  j["nominal_rmse"] = report.nominal_rmse;
  j["augmented_rmse"] = report.augmented_rmse;
  j["nominal_axis"] = json::array({report.nominal_axis[0], report.nominal_axis[1],
                                   report.nominal_axis[2]});
  j["augmented_axis"] =
      json::array({report.augmented_axis[0], report.augmented_axis[1],
                   report.augmented_axis[2]});
  j["n_points"] = report.n_points;
  j["scenario"] = report.scenario;
  j["config_hash"] = config_hash;
  write_json_file(path, j);
}

void save_run_summary(const std::string& path, const RunLog& log,
                      std::uint64_t config_hash) {
  json j;
  j["goal_reached"] = log.goal_reached;
  j["unreachable"] = log.unreachable;
  j["steps"] = log.steps.size();
  j["rmse_position"] = log.rmse_position;
  j["traversed_distance"] = log.traversed_distance;
  j["regeneration_count"] = log.regen_count;
  if (std::isfinite(log.min_clearance)) j["min_clearance"] = log.min_clearance;
  j["config_hash"] = config_hash;
  write_json_file(path, j);
}

void save_sweep_csv(const std::string& path,
                    const std::vector<SweepRow>& table) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << "m,augmented_rmse,median_solve_time\n";
  out.precision(17);
  for (const SweepRow& row : table) {
    out << row.m << ',' << row.augmented_rmse << ',' << row.median_solve_time
        << "\n";
  }
}

void save_reference_csv(const std::string& path,
                        const ReferenceTrajectory& ref) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << "t,px,py,pz,alpha,vx,vy,vz,omega\n";
  out.precision(17);
  for (const ReferenceSample& s : ref.samples) {
    out << s.t << ',' << s.x.p.x() << ',' << s.x.p.y() << ',' << s.x.p.z()
        << ',' << s.x.alpha << ',' << s.u.v.x() << ',' << s.u.v.y() << ','
        << s.u.v.z() << ',' << s.u.omega << "\n";
  }
}

ReferenceTrajectory load_reference_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::string header;
  if (!std::getline(in, header) ||
      header != "t,px,py,pz,alpha,vx,vy,vz,omega") {
    throw DataError("reference CSV '" + path + "': unexpected header");
  }
  ReferenceTrajectory ref;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<double> f;
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(std::stod(cell));
    if (f.size() != 9) {
      throw DataError("reference CSV '" + path + "': expected 9 columns");
    }
    ReferenceSample s;
    s.t = f[0];
    s.x.p = Eigen::Vector3d(f[1], f[2], f[3]);
    s.x.alpha = f[4];
    s.u.v = Eigen::Vector3d(f[5], f[6], f[7]);
    s.u.omega = f[8];
    ref.samples.push_back(s);
  }
  if (ref.samples.size() < 2) {
    throw DataError("reference CSV '" + path + "': too few samples");
  }
  ref.dt = ref.samples[1].t - ref.samples[0].t;
  return ref;
}

}  // namespace resnmpc
