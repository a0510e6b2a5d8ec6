#include "resnmpc/config.hpp"

#include <fstream>
#include <limits>

#include "json.hpp"
#include "resnmpc/errors.hpp"

namespace resnmpc {

namespace {

using nlohmann::json;

json require_field(const json& j, const std::string& scope,
                   const std::string& key) {
  if (!j.contains(key)) {
    throw ConfigError("config: missing field '" + scope + key + "'");
  }
  return j.at(key);
}

Eigen::Vector3d vec3_from(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) {
    throw ConfigError("config: '" + where + "' must be a 3-element array");
  }
  return Eigen::Vector3d(j[0].get<double>(), j[1].get<double>(),
                         j[2].get<double>());
}

Eigen::Vector4d vec4_from(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4) {
    throw ConfigError("config: '" + where + "' must be a 4-element array");
  }
  return Eigen::Vector4d(j[0].get<double>(), j[1].get<double>(),
                         j[2].get<double>(), j[3].get<double>());
}

json vec3_to(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }
json vec4_to(const Eigen::Vector4d& v) {
  return json::array({v[0], v[1], v[2], v[3]});
}

}  // namespace

void ExperimentConfig::validate() const {
  plant.validate();
  nmpc.validate();
  if (sgp.m < 1) throw ConfigError("config: sgp.m must be >= 1");
  if (sgp.bias < 0.0) throw ConfigError("config: sgp.bias must be >= 0");
  sgp.hyp_init.validate();
  if (world.obstacle_count < 0) {
    throw ConfigError("config: world.obstacle_count must be >= 0");
  }
  if (!(world.sensing_radius > 0.0)) {
    throw ConfigError("config: world.sensing_radius must be > 0");
  }
  if (!(reference.v_max > 0.0)) {
    throw ConfigError("config: reference.v_max must be > 0");
  }
  if (!(reference.dt > 0.0)) throw ConfigError("config: reference.dt must be > 0");
  if (reference.waypoints.empty() && !reference.generator.has_value()) {
    throw ConfigError(
        "config: reference needs either 'waypoints' or 'generator'");
  }
  if (loop.max_steps < 1) throw ConfigError("config: loop.max_steps must be >= 1");
}

std::string ExperimentConfig::to_json_string() const {
  json j;
  j["seed"] = seed;
  j["plant"] = {{"tau", plant.tau}, {"c_d", plant.c_d}, {"dt_sim", plant.dt_sim}};
  json jn;
  jn["N"] = nmpc.N;
  jn["dt"] = nmpc.dt;
  jn["Q"] = vec4_to(nmpc.Q);
  jn["R"] = vec4_to(nmpc.R);
  jn["v_max"] = nmpc.v_max;
  jn["omega_max"] = nmpc.omega_max;
  if (nmpc.x_min.allFinite()) jn["x_min"] = vec4_to(nmpc.x_min);
  if (nmpc.x_max.allFinite()) jn["x_max"] = vec4_to(nmpc.x_max);
  jn["d_o"] = nmpc.d_o;
  jn["max_sqp_iters"] = nmpc.max_sqp_iters;
  jn["kkt_tol"] = nmpc.kkt_tol;
  j["nmpc"] = jn;
  j["sgp"] = {{"m", sgp.m},
              {"bias", sgp.bias},
              {"hyp_init",
               {{"sigma_f", sgp.hyp_init.sigma_f},
                {"length_scale", sgp.hyp_init.length_scale},
                {"sigma_n", sgp.hyp_init.sigma_n}}},
              {"max_iters", sgp.max_iters},
              {"max_train_points", sgp.max_train_points}};
  j["world"] = {{"obstacle_count", world.obstacle_count},
                {"bounds_min", vec3_to(world.lo)},
                {"bounds_max", vec3_to(world.hi)},
                {"d_o", world.d_o},
                {"sensing_radius", world.sensing_radius},
                {"endpoint_clearance", world.endpoint_clearance}};
  json jref;
  if (!reference.waypoints.empty()) {
    json arr = json::array();
    for (const auto& w : reference.waypoints) arr.push_back(vec3_to(w));
    jref["waypoints"] = arr;
  }
  if (reference.generator.has_value()) {
    const auto& g = *reference.generator;
    jref["generator"] = {{"count", g.count},
                         {"waypoints_per_trajectory", g.waypoints_per_trajectory},
                         {"min_spacing", g.min_spacing},
                         {"bounds_min", vec3_to(g.lo)},
                         {"bounds_max", vec3_to(g.hi)}};
  }
  jref["v_max"] = reference.v_max;
  jref["dt"] = reference.dt;
  j["reference"] = jref;
  j["loop"] = {{"max_steps", loop.max_steps},
               {"deviation_threshold", loop.deviation_threshold},
               {"goal_tolerance", loop.goal_tolerance},
               {"enable_regeneration", loop.enable_regeneration}};
  j["paths"] = {{"out_dir", out_dir}};
  return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: malformed JSON: ") + e.what());
  }

  ExperimentConfig cfg;
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();

  const json jp = require_field(j, "", "plant");
  if (jp.contains("tau")) cfg.plant.tau = jp["tau"].get<double>();
  if (jp.contains("c_d")) cfg.plant.c_d = jp["c_d"].get<double>();
  if (jp.contains("dt_sim")) cfg.plant.dt_sim = jp["dt_sim"].get<double>();

  const json jn = require_field(j, "", "nmpc");
  if (jn.contains("N")) cfg.nmpc.N = jn["N"].get<int>();
  if (jn.contains("dt")) cfg.nmpc.dt = jn["dt"].get<double>();
  if (jn.contains("Q")) cfg.nmpc.Q = vec4_from(jn["Q"], "nmpc.Q");
  if (jn.contains("R")) cfg.nmpc.R = vec4_from(jn["R"], "nmpc.R");
  if (jn.contains("v_max")) cfg.nmpc.v_max = jn["v_max"].get<double>();
  if (jn.contains("omega_max")) cfg.nmpc.omega_max = jn["omega_max"].get<double>();
  if (jn.contains("x_min")) cfg.nmpc.x_min = vec4_from(jn["x_min"], "nmpc.x_min");
  if (jn.contains("x_max")) cfg.nmpc.x_max = vec4_from(jn["x_max"], "nmpc.x_max");
  if (jn.contains("d_o")) cfg.nmpc.d_o = jn["d_o"].get<double>();
  if (jn.contains("max_sqp_iters")) {
    cfg.nmpc.max_sqp_iters = jn["max_sqp_iters"].get<int>();
  }
  if (jn.contains("kkt_tol")) cfg.nmpc.kkt_tol = jn["kkt_tol"].get<double>();

  if (j.contains("sgp")) {
    const json js = j["sgp"];
    if (js.contains("m")) cfg.sgp.m = js["m"].get<int>();
    if (js.contains("bias")) cfg.sgp.bias = js["bias"].get<double>();
    if (js.contains("hyp_init")) {
      const json jh = js["hyp_init"];
      if (jh.contains("sigma_f")) cfg.sgp.hyp_init.sigma_f = jh["sigma_f"].get<double>();
      if (jh.contains("length_scale")) {
        cfg.sgp.hyp_init.length_scale = jh["length_scale"].get<double>();
      }
      if (jh.contains("sigma_n")) cfg.sgp.hyp_init.sigma_n = jh["sigma_n"].get<double>();
    }
    if (js.contains("max_iters")) cfg.sgp.max_iters = js["max_iters"].get<int>();
    if (js.contains("max_train_points")) {
      cfg.sgp.max_train_points = js["max_train_points"].get<int>();
    }
  }

  if (j.contains("world")) {
    const json jw = j["world"];
    if (jw.contains("obstacle_count")) {
      cfg.world.obstacle_count = jw["obstacle_count"].get<int>();
    }
    if (jw.contains("bounds_min")) cfg.world.lo = vec3_from(jw["bounds_min"], "world.bounds_min");
    if (jw.contains("bounds_max")) cfg.world.hi = vec3_from(jw["bounds_max"], "world.bounds_max");
    if (jw.contains("d_o")) cfg.world.d_o = jw["d_o"].get<double>();
    if (jw.contains("sensing_radius")) {
      cfg.world.sensing_radius = jw["sensing_radius"].get<double>();
    }
    if (jw.contains("endpoint_clearance")) {
      cfg.world.endpoint_clearance = jw["endpoint_clearance"].get<double>();
    }
  }

  const json jref = require_field(j, "", "reference");
  if (jref.contains("waypoints")) {
    for (const json& w : jref["waypoints"]) {
      cfg.reference.waypoints.push_back(vec3_from(w, "reference.waypoints[]"));
    }
  }
  if (jref.contains("generator")) {
    ReferenceGeneratorSpec gen;
    const json jg = jref["generator"];
    if (jg.contains("count")) gen.count = jg["count"].get<int>();
    if (jg.contains("waypoints_per_trajectory")) {
      gen.waypoints_per_trajectory = jg["waypoints_per_trajectory"].get<int>();
    }
    if (jg.contains("min_spacing")) gen.min_spacing = jg["min_spacing"].get<double>();
    if (jg.contains("bounds_min")) gen.lo = vec3_from(jg["bounds_min"], "reference.generator.bounds_min");
    if (jg.contains("bounds_max")) gen.hi = vec3_from(jg["bounds_max"], "reference.generator.bounds_max");
    cfg.reference.generator = gen;
  }
  cfg.reference.v_max =
      require_field(jref, "reference.", "v_max").get<double>();
  cfg.reference.dt = require_field(jref, "reference.", "dt").get<double>();

  if (j.contains("loop")) {
    const json jl = j["loop"];
    if (jl.contains("max_steps")) cfg.loop.max_steps = jl["max_steps"].get<int>();
    if (jl.contains("deviation_threshold")) {
      cfg.loop.deviation_threshold = jl["deviation_threshold"].get<double>();
    }
    if (jl.contains("goal_tolerance")) {
      cfg.loop.goal_tolerance = jl["goal_tolerance"].get<double>();
    }
    if (jl.contains("enable_regeneration")) {
      cfg.loop.enable_regeneration = jl["enable_regeneration"].get<bool>();
    }
  }

  if (j.contains("paths")) {
    const json jpaths = j["paths"];
    if (jpaths.contains("out_dir")) cfg.out_dir = jpaths["out_dir"].get<std::string>();
  }

  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return from_json_string(text);
}

void ExperimentConfig::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("config: cannot write '" + path + "'");
  out << to_json_string() << "\n";
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t ExperimentConfig::config_hash() const {
  return fnv1a64(to_json_string());
}

}  // namespace resnmpc
