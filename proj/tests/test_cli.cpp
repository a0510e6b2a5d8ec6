#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
  const char* path = std::getenv("RESNMPC_CLI");
  REQUIRE_MESSAGE(path != nullptr, "RESNMPC_CLI must point at the binary");
  return path;
}

int run_cli(const std::string& args) {
  const std::string cmd = cli_path() + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE_MESSAGE(in.good(), ("missing file: " + path.string()).c_str());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path make_workdir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("resnmpc_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_config(const fs::path& path, const fs::path& out_dir,
                  int ref_count) {
  std::ofstream cfg(path);
  cfg << R"({
  "seed": 5,
  "plant": {"tau": 0.1, "c_d": 0.6, "dt_sim": 0.01},
  "nmpc": {"N": 12, "dt": 0.1},
  "sgp": {"m": 12, "bias": 0.5, "max_iters": 150, "max_train_points": 800},
  "world": {"obstacle_count": 12},
  "reference": {
    "generator": {"count": )"
      << ref_count << R"(, "waypoints_per_trajectory": 5, "min_spacing": 3.0},
    "v_max": 1.5,
    "dt": 0.1
  },
  "loop": {"max_steps": 700},
  "paths": {"out_dir": ")"
      << out_dir.string() << R"("}
})";
}

}  // namespace

TEST_CASE("gen-ref writes straight-line CSV for collinear waypoints") {
  const fs::path dir = make_workdir("genref");
  const fs::path cfg = dir / "cfg.json";
  std::ofstream(cfg) << R"({
    "seed": 1,
    "plant": {},
    "nmpc": {},
    "reference": {"waypoints": [[0,0,1],[2,0,1],[4,0,1],[6,0,1]],
                  "v_max": 1.0, "dt": 0.1},
    "paths": {"out_dir": ")" << (dir / "out").string() << R"("}
  })";
  CHECK(run_cli("gen-ref --config " + cfg.string()) == 0);
  const std::string csv = read_file(dir / "out/refs/ref_00.csv");
  CHECK(csv.rfind("t,px,py,pz,alpha,vx,vy,vz,omega\n", 0) == 0);
  // Straight line: every y stays zero.
  std::stringstream ss(csv);
  std::string line;
  std::getline(ss, line);
  while (std::getline(ss, line)) {
    std::stringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');  // t
    std::getline(row, cell, ',');  // px
    std::getline(row, cell, ',');  // py
    CHECK(std::abs(std::stod(cell)) < 1e-9);
  }
}

TEST_CASE("missing v_max exits with the config code and names the field") {
  const fs::path dir = make_workdir("badcfg");
  const fs::path cfg = dir / "cfg.json";
  std::ofstream(cfg) << R"({
    "plant": {},
    "nmpc": {},
    "reference": {"waypoints": [[0,0,1],[2,0,1],[4,0,1],[6,0,1]], "dt": 0.1}
  })";
  const std::string err_file = (dir / "stderr.txt").string();
  const std::string cmd = cli_path() + " gen-ref --config " + cfg.string() +
                          " 2> " + err_file + " > /dev/null";
  const int code = WEXITSTATUS(std::system(cmd.c_str()));
  CHECK(code == 1);
  CHECK(read_file(err_file).find("v_max") != std::string::npos);
}

TEST_CASE("malformed JSON exits with the config code") {
  const fs::path dir = make_workdir("badjson");
  const fs::path cfg = dir / "cfg.json";
  std::ofstream(cfg) << "{ not json";
  CHECK(run_cli("gen-ref --config " + cfg.string()) == 1);
}

TEST_CASE("collect without runs exits with the data code") {
  const fs::path dir = make_workdir("nodata");
  const fs::path cfg = dir / "cfg.json";
  write_config(cfg, dir / "out", 2);
  CHECK(run_cli("collect --config " + cfg.string() + " --no-obstacles") == 2);
}

TEST_CASE("pipeline end-to-end with deterministic training") {
  const fs::path dir = make_workdir("pipeline");
  const fs::path cfg = dir / "cfg.json";
  const fs::path out = dir / "out";
  write_config(cfg, out, 3);

  const std::string base = " --config " + cfg.string();
  REQUIRE(run_cli("gen-ref" + base) == 0);
  REQUIRE(run_cli("run" + base + " --no-obstacles") == 0);
  REQUIRE(run_cli("collect" + base + " --no-obstacles") == 0);
  REQUIRE(run_cli("train" + base + " --no-obstacles") == 0);
  REQUIRE(run_cli("evaluate" + base + " --no-obstacles") == 0);

  const std::string rmse_json = read_file(out / "rmse_no_obstacles.json");
  CHECK(rmse_json.find("\"nominal_rmse\"") != std::string::npos);
  CHECK(rmse_json.find("\"augmented_rmse\"") != std::string::npos);
  CHECK(rmse_json.find("\"config_hash\"") != std::string::npos);

  // Same seed twice: byte-identical model JSON.
  const std::string model_x = read_file(out / "models/sgp_x.json");
  REQUIRE(run_cli("train" + base + " --no-obstacles") == 0);
  CHECK(read_file(out / "models/sgp_x.json") == model_x);

  // Idempotent evaluation.
  const std::string report = read_file(out / "rmse_no_obstacles.json");
  REQUIRE(run_cli("evaluate" + base + " --no-obstacles") == 0);
  CHECK(read_file(out / "rmse_no_obstacles.json") == report);

  // Run log CSV carries the run schema.
  const std::string log_csv = read_file(out / "runs_no_obstacles/run_00.csv");
  CHECK(log_csv.rfind("t,x_px,x_py,x_pz,x_alpha,u_vx,u_vy,u_vz,u_omega,"
                      "pred_px,pred_py,pred_pz,pred_alpha,"
                      "actual_px,actual_py,actual_pz,actual_alpha,"
                      "solve_time,sqp_iters,regenerated,vhat_x,vhat_y,vhat_z\n",
                      0) == 0);

  // Dataset CSV carries the exact documented header.
  const std::string ds_csv = read_file(out / "dataset_no_obstacles.csv");
  CHECK(ds_csv.rfind("vbar_x,vbar_y,vbar_z,vhat_x,vhat_y,vhat_z,delta,"
                     "y_x,y_y,y_z\n",
                     0) == 0);
}

TEST_CASE("sweep emits the inducing-count table") {
  const fs::path dir = make_workdir("sweep");
  const fs::path cfg = dir / "cfg.json";
  const fs::path out = dir / "out";
  write_config(cfg, out, 3);

  const std::string base = " --config " + cfg.string();
  REQUIRE(run_cli("gen-ref" + base) == 0);
  REQUIRE(run_cli("run" + base + " --no-obstacles") == 0);
  REQUIRE(run_cli("collect" + base + " --no-obstacles") == 0);
  REQUIRE(run_cli("sweep" + base + " --m 5,10") == 0);

  const std::string table = read_file(out / "sweep.csv");
  CHECK(table.rfind("m,augmented_rmse,median_solve_time\n", 0) == 0);
  CHECK(table.find("\n5,") != std::string::npos);
  CHECK(table.find("\n10,") != std::string::npos);
}
