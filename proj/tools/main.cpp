// Command-line front end: binds reference generation, data collection,
// sparse-GP training, evaluation, closed-loop runs and the inducing-point
// sweep into reproducible experiments driven by a JSON config.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "resnmpc/config.hpp"
#include "resnmpc/dataset.hpp"
#include "resnmpc/errors.hpp"
#include "resnmpc/pipeline.hpp"
#include "resnmpc/serialization.hpp"
#include "resnmpc/threading.hpp"

namespace fs = std::filesystem;
using namespace resnmpc;

namespace {

struct GlobalArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  std::string out_override;
  bool with_obstacles = false;
  bool no_obstacles = false;
  bool debug_solver = false;
  std::string model_dir;
  std::string m_values = "5,10,20,30,50";
};

ExperimentConfig load_config(const GlobalArgs& args) {
  if (args.config_path.empty()) {
    throw ConfigError("config: --config <path> is required");
  }
  ExperimentConfig cfg = ExperimentConfig::load(args.config_path);
  if (args.seed_override.has_value()) cfg.seed = *args.seed_override;
  if (!args.out_override.empty()) cfg.out_dir = args.out_override;
  return cfg;
}

std::string scenario_name(bool with_obstacles) {
  return with_obstacles ? "obstacles" : "no_obstacles";
}

std::string scenario_label(bool with_obstacles) {
  return with_obstacles ? "with_obstacles" : "without_obstacles";
}

bool resolve_obstacles(const GlobalArgs& args) {
  if (args.with_obstacles && args.no_obstacles) {
    throw ConfigError("config: pass only one of --obstacles/--no-obstacles");
  }
  return args.with_obstacles;
}

std::vector<ReferenceTrajectory> build_references(const ExperimentConfig& cfg) {
  std::vector<ReferenceTrajectory> refs;
  if (!cfg.reference.waypoints.empty()) {
    refs.push_back(generate_reference(cfg.reference.waypoints,
                                      cfg.reference.v_max, cfg.reference.dt));
  }
  if (cfg.reference.generator.has_value()) {
    for (const auto& wps :
         generate_waypoint_sets(*cfg.reference.generator, cfg.seed)) {
      refs.push_back(
          generate_reference(wps, cfg.reference.v_max, cfg.reference.dt));
    }
  }
  return refs;
}

std::vector<ReferenceTrajectory> load_references(const std::string& dir) {
  std::vector<std::string> files;
  if (fs::is_directory(dir)) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.path().extension() == ".csv") {
        files.push_back(entry.path().string());
      }
    }
  }
  if (files.empty()) {
    throw DataError("no reference CSVs under '" + dir + "' (run gen-ref first)");
  }
  std::sort(files.begin(), files.end());
  std::vector<ReferenceTrajectory> refs;
  for (const std::string& f : files) refs.push_back(load_reference_csv(f));
  return refs;
}

int cmd_gen_ref(const GlobalArgs& args) {
  const ExperimentConfig cfg = load_config(args);
  const std::vector<ReferenceTrajectory> refs = build_references(cfg);
  const std::string dir = cfg.out_dir + "/refs";
  fs::create_directories(dir);
  for (size_t i = 0; i < refs.size(); ++i) {
    std::ostringstream name;
    name << dir << "/ref_" << (i < 10 ? "0" : "") << i << ".csv";
    save_reference_csv(name.str(), refs[i]);
  }
  std::cout << "wrote " << refs.size() << " reference file(s) to " << dir
            << "\n";
  return 0;
}

int cmd_run(const GlobalArgs& args) {
  const ExperimentConfig cfg = load_config(args);
  const bool with_obstacles = resolve_obstacles(args);
  const std::vector<ReferenceTrajectory> refs =
      load_references(cfg.out_dir + "/refs");

  std::optional<TrainedModelSet> model;
  if (!args.model_dir.empty()) model = load_model_set(args.model_dir);

  std::vector<RunLog> logs;
  if (args.debug_solver) {
    // Diagnostics would interleave across workers, so run sequentially.
    fs::create_directories(cfg.out_dir);
    std::ofstream debug_file(cfg.out_dir + "/solver_debug.jsonl");
    const NmpcConfig& nmpc_cfg = cfg.nmpc;
    ClosedLoopOptions opts = loop_options(cfg);
    opts.solver_debug_stream = &debug_file;
    for (size_t i = 0; i < refs.size(); ++i) {
      WorldModel world;
      world.sensing_radius = cfg.world.sensing_radius;
      if (with_obstacles) {
        world = build_forest_world(
            cfg.world, cfg.seed + 7919 * static_cast<std::uint64_t>(i + 1),
            {refs[i].samples.front().x.p, refs[i].goal()});
      }
      world.goal = refs[i].goal();
      logs.push_back(closed_loop_run(nmpc_cfg, world, refs[i], cfg.plant,
                                     model ? &model->set : nullptr, opts));
    }
  } else {
    logs = run_batch(cfg, refs, with_obstacles, model ? &model->set : nullptr);
  }

  const std::string dir = cfg.out_dir + "/runs_" + scenario_name(with_obstacles);
  fs::create_directories(dir);
  int reached = 0;
  for (size_t i = 0; i < logs.size(); ++i) {
    std::ostringstream base;
    base << dir << "/run_" << (i < 10 ? "0" : "") << i;
    std::ofstream csv(base.str() + ".csv");
    logs[i].write_csv(csv);
    save_run_summary(base.str() + "_summary.json", logs[i], cfg.config_hash());
    reached += logs[i].goal_reached ? 1 : 0;
  }
  std::cout << "completed " << logs.size() << " run(s), " << reached
            << " reached the goal; logs in " << dir << "\n";
  return 0;
}

int cmd_collect(const GlobalArgs& args) {
  const ExperimentConfig cfg = load_config(args);
  const bool with_obstacles = resolve_obstacles(args);
  const std::string runs_dir =
      cfg.out_dir + "/runs_" + scenario_name(with_obstacles);

  std::vector<std::string> files;
  if (fs::is_directory(runs_dir)) {
    for (const auto& entry : fs::directory_iterator(runs_dir)) {
      if (entry.path().extension() == ".csv") {
        files.push_back(entry.path().string());
      }
    }
  }
  if (files.empty()) {
    throw DataError("no run logs under '" + runs_dir + "' (run 'run' first)");
  }
  std::sort(files.begin(), files.end());

  std::vector<RunLog> logs;
  for (const std::string& f : files) {
    std::ifstream in(f);
    logs.push_back(RunLog::read_csv(in));
  }
  const ResidualDataset ds = collect(logs);
  const auto [train, test] = split_by_trajectory(ds, 0.8, cfg.seed);

  const std::string base =
      cfg.out_dir + "/dataset_" + scenario_name(with_obstacles);
  {
    std::ofstream all(base + ".csv");
    ds.write_csv(all);
    std::ofstream tr(base + "_train.csv");
    train.write_csv(tr);
    std::ofstream te(base + "_test.csv");
    test.write_csv(te);
  }
  std::cout << "collected " << ds.n() << " rows from " << logs.size()
            << " run(s): " << train.n() << " train / " << test.n() << " test\n";
  return 0;
}

ResidualDataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset '" + path + "'");
  return ResidualDataset::read_csv(in);
}

int cmd_train(const GlobalArgs& args) {
  const ExperimentConfig cfg = load_config(args);
  const bool with_obstacles = resolve_obstacles(args);
  const std::string path = cfg.out_dir + "/dataset_" +
                           scenario_name(with_obstacles) + "_train.csv";
  const ResidualDataset train = load_dataset(path);

  SgpTrainConfig tcfg;
  tcfg.m = cfg.sgp.m;
  tcfg.bias = cfg.sgp.bias;
  tcfg.hyp_init = cfg.sgp.hyp_init;
  tcfg.max_iters = cfg.sgp.max_iters;
  tcfg.max_train_points = cfg.sgp.max_train_points;
  const TrainedModelSet trained = train_model_set(train, tcfg, cfg.seed);

  const std::string dir = cfg.out_dir + "/models";
  save_model_set(dir, trained, cfg.config_hash());
  std::cout << "trained 3 axis models (m = " << tcfg.m << ") on " << train.n()
            << " rows; saved to " << dir << "\n";
  for (int a = 0; a < 3; ++a) {
    std::cout << "  axis " << "xyz"[a] << ": elbo = " << trained.reports[a].elbo;
    if (trained.reports[a].gap.has_value()) {
      std::cout << ", gap to exact lml = " << *trained.reports[a].gap;
    }
    std::cout << "\n";
  }
  return 0;
}

int cmd_evaluate(const GlobalArgs& args) {
  const ExperimentConfig cfg = load_config(args);
  const bool with_obstacles = resolve_obstacles(args);
  const std::string path = cfg.out_dir + "/dataset_" +
                           scenario_name(with_obstacles) + "_test.csv";
  const ResidualDataset test = load_dataset(path);

  const std::string model_dir =
      args.model_dir.empty() ? cfg.out_dir + "/models" : args.model_dir;
  const TrainedModelSet trained = load_model_set(model_dir);

  RmseReport report = nominal_and_augmented_errors(test, trained.set);
  report.scenario = scenario_label(with_obstacles);
  const std::string out_path =
      cfg.out_dir + "/rmse_" + scenario_name(with_obstacles) + ".json";
  save_rmse_report(out_path, report, cfg.config_hash());
  std::cout << "scenario " << report.scenario
            << ": nominal_rmse = " << report.nominal_rmse
            << ", augmented_rmse = " << report.augmented_rmse
            << " (n = " << report.n_points << "); wrote " << out_path << "\n";
  return 0;
}

int cmd_sweep(const GlobalArgs& args) {
  const ExperimentConfig cfg = load_config(args);
  const std::string base = cfg.out_dir + "/dataset_no_obstacles";
  const ResidualDataset train = load_dataset(base + "_train.csv");
  const ResidualDataset test = load_dataset(base + "_test.csv");

  std::vector<int> m_values;
  std::stringstream ss(args.m_values);
  std::string tok;
  while (std::getline(ss, tok, ',')) m_values.push_back(std::stoi(tok));
  std::sort(m_values.begin(), m_values.end());

  SgpTrainConfig tcfg;
  tcfg.bias = cfg.sgp.bias;
  tcfg.hyp_init = cfg.sgp.hyp_init;
  tcfg.max_iters = cfg.sgp.max_iters;
  tcfg.max_train_points = std::min(cfg.sgp.max_train_points, 1500);

  const std::vector<SweepRow> table =
      sweep_inducing_points(train, test, m_values, cfg.nmpc, tcfg, cfg.seed);
  fs::create_directories(cfg.out_dir);
  save_sweep_csv(cfg.out_dir + "/sweep.csv", table);
  std::cout << "m,augmented_rmse,median_solve_time\n";
  for (const SweepRow& row : table) {
    std::cout << row.m << ',' << row.augmented_rmse << ','
              << row.median_solve_time << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Residual-dynamics learning for an NMPC quadrotor planner"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalArgs args;
  app.add_option("--config", args.config_path, "Experiment config JSON")
      ->envname("RESNMPC_CONFIG");
  app.add_option("--seed", args.seed_override, "Override the config seed");
  app.add_option("--out", args.out_override, "Override the output directory");
  app.add_flag("--debug-solver", args.debug_solver,
               "Stream SQP diagnostics as JSON lines");

  CLI::App* gen = app.add_subcommand("gen-ref", "Generate reference CSVs");
  CLI::App* run = app.add_subcommand("run", "Closed-loop runs over the references");
  run->add_option("--model", args.model_dir, "Trained model directory");
  CLI::App* col = app.add_subcommand("collect", "Build the residual dataset");
  CLI::App* tr = app.add_subcommand("train", "Train the sparse residual models");
  CLI::App* ev = app.add_subcommand("evaluate", "Nominal vs augmented RMSE");
  ev->add_option("--model", args.model_dir, "Trained model directory");
  CLI::App* sw = app.add_subcommand("sweep", "Inducing-point sweep");
  sw->add_option("--m", args.m_values, "Comma-separated inducing counts");

  for (CLI::App* sub : {run, col, ev, tr}) {
    sub->add_flag("--obstacles", args.with_obstacles, "Obstacle scenario");
    sub->add_flag("--no-obstacles", args.no_obstacles,
                  "Obstacle-free scenario");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_ref(args);
    if (run->parsed()) return cmd_run(args);
    if (col->parsed()) return cmd_collect(args);
    if (tr->parsed()) return cmd_train(args);
    if (ev->parsed()) return cmd_evaluate(args);
    if (sw->parsed()) return cmd_sweep(args);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const SolverError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
