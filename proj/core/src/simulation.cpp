#include "resnmpc/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "resnmpc/errors.hpp"

namespace resnmpc {

namespace {

const char* const kRunLogHeader =
    "t,x_px,x_py,x_pz,x_alpha,u_vx,u_vy,u_vz,u_omega,"
    "pred_px,pred_py,pred_pz,pred_alpha,"
    "actual_px,actual_py,actual_pz,actual_alpha,"
    "solve_time,sqp_iters,regenerated,vhat_x,vhat_y,vhat_z";

ReferenceSlice make_slice(const ReferenceTrajectory& ref, int idx, int horizon) {
  ReferenceSlice slice;
  const int last = static_cast<int>(ref.samples.size()) - 1;
  for (int i = 0; i <= horizon; ++i) {
    const int j = std::min(idx + i, last);
    slice.states.push_back(ref.samples[j].x);
  }
  for (int i = 0; i < horizon; ++i) {
    const int j = idx + i;
    if (j < last) {
      slice.controls.push_back(ref.samples[j].u);
    } else {
      slice.controls.push_back(ControlInput{});  // hover at the end
    }
  }
  return slice;
}

}  // namespace

void RunLog::write_csv(std::ostream& os) const {
  os << kRunLogHeader << "\n";
  os.precision(17);
  for (const StepRecord& s : steps) {
    os << s.t << ',' << s.x.p.x() << ',' << s.x.p.y() << ',' << s.x.p.z()
       << ',' << s.x.alpha << ',' << s.u_applied.v.x() << ','
       << s.u_applied.v.y() << ',' << s.u_applied.v.z() << ','
       << s.u_applied.omega << ',' << s.x_pred_next.p.x() << ','
       << s.x_pred_next.p.y() << ',' << s.x_pred_next.p.z() << ','
       << s.x_pred_next.alpha << ',' << s.x_actual_next.p.x() << ','
       << s.x_actual_next.p.y() << ',' << s.x_actual_next.p.z() << ','
       << s.x_actual_next.alpha << ',' << s.solve_time << ',' << s.sqp_iters
       << ',' << (s.regenerated ? 1 : 0) << ',' << s.vhat_body.x() << ','
       << s.vhat_body.y() << ',' << s.vhat_body.z() << "\n";
  }
}

RunLog RunLog::read_csv(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) {
    throw DataError("run log: empty stream");
  }
  if (header.find("actual_px") == std::string::npos) {
    throw DataError("run log: missing actual-state column");
  }
  if (header != kRunLogHeader) {
    throw DataError("run log: unexpected header: " + header);
  }
  RunLog log;
  std::string line;
  double prev_t = 0.0;
  bool have_prev = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<double> f;
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(std::stod(cell));
    if (f.size() != 23) {
      throw DataError("run log: expected 23 columns, got " +
                      std::to_string(f.size()));
    }
    StepRecord s;
    s.t = f[0];
    s.x.p = Eigen::Vector3d(f[1], f[2], f[3]);
    s.x.alpha = f[4];
    s.u_applied.v = Eigen::Vector3d(f[5], f[6], f[7]);
    s.u_applied.omega = f[8];
    s.x_pred_next.p = Eigen::Vector3d(f[9], f[10], f[11]);
    s.x_pred_next.alpha = f[12];
    s.x_actual_next.p = Eigen::Vector3d(f[13], f[14], f[15]);
    s.x_actual_next.alpha = f[16];
    s.solve_time = f[17];
    s.sqp_iters = static_cast<int>(f[18]);
    s.regenerated = f[19] != 0.0;
    s.vhat_body = Eigen::Vector3d(f[20], f[21], f[22]);
    if (have_prev && s.t <= prev_t) {
      throw DataError("run log: timestamps not strictly increasing");
    }
    prev_t = s.t;
    have_prev = true;
    log.steps.push_back(s);
  }
  if (log.steps.size() >= 2) log.dt = log.steps[1].t - log.steps[0].t;
  for (const StepRecord& s : log.steps) log.regen_count += s.regenerated ? 1 : 0;
  return log;
}

RegenerationResult maybe_regenerate(const ReferenceTrajectory& ref,
                                    const State& x_actual, double threshold,
                                    const WorldModel& world, int tracked_index,
                                    double d_o, double margin, double v_max) {
  if (!(threshold > 0.0)) {
    throw std::invalid_argument("maybe_regenerate: threshold must be > 0");
  }
  const int last = static_cast<int>(ref.samples.size()) - 1;
  const int idx = std::clamp(tracked_index, 0, last);
  const double deviation = (x_actual.p - ref.samples[idx].x.p).norm();
  if (deviation <= threshold) {
    return {ref, false};
  }

  const Eigen::Vector3d start = x_actual.p;
  const Eigen::Vector3d goal = ref.goal();
  const double length = (goal - start).norm();
  if (length < 1e-6) return {ref, false};
  const Eigen::Vector3d tangent = (goal - start) / length;
  Eigen::Vector3d normal = tangent.cross(Eigen::Vector3d::UnitZ());
  if (normal.norm() < 1e-9) normal = Eigen::Vector3d::UnitY();
  normal.normalize();

  const std::vector<Obstacle> visible = visible_obstacles(world, start);

  // Dense candidates along the straight connection, pushed radially out of
  // the visible safe zones. The lateral margin escalates until the sampled
  // spline itself clears the obstacles.
  RegenerationResult out;
  out.regenerated = true;
  double attempt_margin = margin;
  for (int attempt = 0; attempt < 3; ++attempt, attempt_margin *= 1.6) {
    const double clear_dist = d_o + attempt_margin;
    const int count = std::max(3, static_cast<int>(std::floor(length / 1.0)));
    std::vector<Eigen::Vector3d> candidates;
    for (int k = 1; k <= count; ++k) {
      candidates.push_back(start + tangent * (length * k / (count + 1.0)));
    }

    const auto push_out = [&](std::vector<Eigen::Vector3d>& pts) {
      for (int pass = 0; pass < 20; ++pass) {
        bool moved = false;
        for (Eigen::Vector3d& q : pts) {
          for (const Obstacle& obs : visible) {
            Eigen::Vector3d rel = q - obs.center;
            if (rel.norm() >= clear_dist) continue;
            if (rel.norm() < 1e-9) rel = normal;
            q = obs.center + rel.normalized() * (clear_dist + 1e-3);
            moved = true;
          }
        }
        if (!moved) break;
      }
    };
    push_out(candidates);

    // Keep the detour on one side: mirror minority-side candidates across
    // the straight connection and push again.
    double side_sum = 0.0;
    for (const Eigen::Vector3d& q : candidates) {
      side_sum += (q - start).dot(normal);
    }
    const double side = side_sum >= 0.0 ? 1.0 : -1.0;
    for (Eigen::Vector3d& q : candidates) {
      const double lat = (q - start).dot(normal);
      if (lat * side < 0.0) q -= 2.0 * lat * normal;
    }
    push_out(candidates);

    // Waypoints with symmetric triplets so the spline starts exactly at the
    // pose and ends exactly at the goal.
    const double eps = 0.2;
    const Eigen::Vector3d start_dir =
        (candidates.front() - start).norm() > 1e-6
            ? (candidates.front() - start).normalized()
            : tangent;
    const Eigen::Vector3d goal_dir =
        (goal - candidates.back()).norm() > 1e-6
            ? (goal - candidates.back()).normalized()
            : tangent;

    std::vector<Eigen::Vector3d> waypoints;
    waypoints.push_back(start - eps * start_dir);
    waypoints.push_back(start);
    waypoints.push_back(start + eps * start_dir);
    for (const Eigen::Vector3d& q : candidates) {
      if ((q - waypoints.back()).norm() > 0.3) waypoints.push_back(q);
    }
    if ((goal - eps * goal_dir - waypoints.back()).norm() > 0.3) {
      waypoints.push_back(goal - eps * goal_dir);
    }
    waypoints.push_back(goal);
    waypoints.push_back(goal + eps * goal_dir);

    out.trajectory = generate_reference(waypoints, v_max, ref.dt);

    // Accept once the sampled trajectory clears the visible obstacles
    // (skipping the unavoidable start region when the pose sits in a zone).
    double min_clear = std::numeric_limits<double>::infinity();
    for (const ReferenceSample& s : out.trajectory.samples) {
      if ((s.x.p - start).norm() < d_o) continue;
      for (const Obstacle& obs : visible) {
        min_clear = std::min(min_clear, (s.x.p - obs.center).norm());
      }
    }
    if (min_clear >= d_o + 0.05) break;
  }
  return out;
}

RunLog closed_loop_run(const NmpcConfig& cfg, const WorldModel& world,
                       const ReferenceTrajectory& ref, const PlantConfig& plant,
                       const SgpModelSet* models, const ClosedLoopOptions& opts) {
  cfg.validate();
  plant.validate();
  world.validate();
  if (ref.samples.size() < 2) {
    throw std::invalid_argument("closed_loop_run: reference too short");
  }
  if (std::abs(ref.dt - cfg.dt) > 1e-9) {
    throw std::invalid_argument("closed_loop_run: reference dt != NMPC dt");
  }

  RunLog log;
  log.dt = cfg.dt;

  ReferenceTrajectory current = ref;
  int idx = 0;

  PlantState ps;
  ps.x = current.samples[0].x;

  NmpcSolver solver(cfg);
  solver.set_debug_stream(opts.solver_debug_stream);
  std::optional<NmpcSolution> warm;

  double squared_error_sum = 0.0;
  int stagnant_regens = 0;
  double dist_at_last_regen =
      (world.goal - ps.x.p).norm();

  for (int step = 0; step < opts.max_steps; ++step) {
    if ((ps.x.p - world.goal).norm() <= opts.goal_tolerance) {
      log.goal_reached = true;
      break;
    }

    const ReferenceSlice slice = make_slice(current, idx, cfg.N);
    const std::vector<Obstacle> visible = visible_obstacles(world, ps.x.p);

    NmpcSolution sol;
    if (warm.has_value()) {
      const NmpcSolution shifted = NmpcSolver::shift_warm_start(*warm);
      sol = solver.solve(ps.x, slice, visible, models, &shifted);
    } else {
      sol = solver.solve(ps.x, slice, visible, models, nullptr);
    }
    warm = sol;

    const ControlInput u0 = sol.control(0);
    const PlantState next = plant_step(plant, ps, u0, cfg.dt);

    StepRecord rec;
    rec.t = step * cfg.dt;
    rec.x = ps.x;
    rec.u_applied = u0;
    rec.x_pred_next = sol.state(1);
    rec.x_actual_next = next.x;
    rec.vhat_body = next.v;
    rec.solve_time = sol.solve_time;
    rec.sqp_iters = sol.sqp_iters;
    rec.solve_status = sol.status;

    const int last = static_cast<int>(current.samples.size()) - 1;
    squared_error_sum +=
        (ps.x.p - current.samples[std::min(idx, last)].x.p).squaredNorm();
    log.traversed_distance += (next.x.p - ps.x.p).norm();
    for (const Obstacle& obs : world.obstacles) {
      log.min_clearance =
          std::min(log.min_clearance, (next.x.p - obs.center).norm());
    }

    ps = next;
    ++idx;
    log.steps.push_back(rec);

    if (opts.enable_regeneration) {
      const RegenerationResult regen = maybe_regenerate(
          current, ps.x, opts.deviation_threshold, world,
          std::min(idx, last), cfg.d_o, opts.regen_margin, opts.v_max);
      if (regen.regenerated) {
        log.steps.back().regenerated = true;
        ++log.regen_count;
        current = regen.trajectory;
        idx = 0;
        warm.reset();

        const double dist_now = (world.goal - ps.x.p).norm();
        if (dist_at_last_regen - dist_now < opts.regen_progress_min) {
          ++stagnant_regens;
        } else {
          stagnant_regens = 0;
        }
        dist_at_last_regen = dist_now;
        if (stagnant_regens >= opts.max_stagnant_regens) {
          log.unreachable = true;
          break;
        }
      }
    }
  }

  if (!log.steps.empty()) {
    log.rmse_position =
        std::sqrt(squared_error_sum / static_cast<double>(log.steps.size()));
  }
  return log;
}

}  // namespace resnmpc
