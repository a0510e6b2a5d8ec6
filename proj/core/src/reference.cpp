#include "resnmpc/reference.hpp"

#include <cmath>
#include <stdexcept>

#include "resnmpc/bspline.hpp"
#include "resnmpc/dynamics.hpp"

namespace resnmpc {

namespace {

constexpr double kMinHorizontalSpeed = 1e-6;

double sampled_peak_speed(const UniformCubicBspline& spline, double rate,
                          double dt) {
  double peak = 0.0;
  const double s_max = spline.max_param();
  for (int j = 0;; ++j) {
    double s = rate * dt * j;
    bool last = false;
    if (s >= s_max) {
      s = s_max;
      last = true;
    }
    peak = std::max(peak, (spline.velocity(s) * rate).norm());
    if (last) break;
  }
  return peak;
}

}  // namespace

ReferenceTrajectory generate_reference(
    const std::vector<Eigen::Vector3d>& waypoints, double v_max, double dt) {
  if (waypoints.size() < 4) {
    throw std::invalid_argument("generate_reference: need >= 4 waypoints");
  }
  if (!(v_max > 0.0) || !(dt > 0.0)) {
    throw std::invalid_argument("generate_reference: v_max and dt must be > 0");
  }
  for (size_t k = 0; k + 1 < waypoints.size(); ++k) {
    if ((waypoints[k + 1] - waypoints[k]).norm() < 1e-9) {
      throw std::invalid_argument(
          "generate_reference: coincident consecutive waypoints at index " +
          std::to_string(k));
    }
  }

  const UniformCubicBspline spline(waypoints);

  // Natural peak parametric speed from a dense sweep.
  double natural_peak = 0.0;
  const int dense = 200 * spline.num_segments();
  for (int i = 0; i <= dense; ++i) {
    const double s = spline.max_param() * i / dense;
    natural_peak = std::max(natural_peak, spline.velocity(s).norm());
  }
  if (natural_peak < 1e-12) {
    throw std::invalid_argument("generate_reference: degenerate spline");
  }

  // Constant parameter-to-time rate; when the velocity bound is active,
  // iterate so the peak over the actual samples lands on v_max exactly.
  double rate = 1.0;
  if (natural_peak > v_max) {
    rate = v_max / natural_peak;
    for (int it = 0; it < 100; ++it) {
      const double peak = sampled_peak_speed(spline, rate, dt);
      if (std::abs(peak - v_max) <= 1e-12 * v_max) break;
      rate *= v_max / peak;
    }
  }

  ReferenceTrajectory traj;
  traj.dt = dt;
  traj.source_waypoints = waypoints;

  std::vector<Eigen::Vector3d> vel_world;
  const double s_max = spline.max_param();
  for (int j = 0;; ++j) {
    double s = rate * dt * j;
    bool last = false;
    if (s >= s_max) {
      s = s_max;
      last = true;
    }
    ReferenceSample sample;
    sample.t = dt * j;
    sample.x.p = spline.position(s);
    vel_world.push_back(spline.velocity(s) * rate);
    traj.samples.push_back(sample);
    if (last) break;
  }

  // Yaw follows the horizontal velocity direction; constant through
  // vertical/zero-velocity stretches.
  const int count = static_cast<int>(traj.samples.size());
  std::vector<double> yaw(count, 0.0);
  int first_valid = -1;
  for (int j = 0; j < count; ++j) {
    const double hspeed = std::hypot(vel_world[j].x(), vel_world[j].y());
    if (hspeed > kMinHorizontalSpeed) {
      yaw[j] = std::atan2(vel_world[j].y(), vel_world[j].x());
      if (first_valid < 0) first_valid = j;
    } else {
      yaw[j] = (j > 0) ? yaw[j - 1] : 0.0;
    }
  }
  if (first_valid > 0) {
    for (int j = 0; j < first_valid; ++j) yaw[j] = yaw[first_valid];
  }

  for (int j = 0; j < count; ++j) {
    traj.samples[j].x.alpha = wrap_angle(yaw[j]);
    traj.samples[j].u.v =
        yaw_rotation(traj.samples[j].x.alpha).transpose() * vel_world[j];
    if (j + 1 < count) {
      traj.samples[j].u.omega = wrap_angle(yaw[j + 1] - yaw[j]) / dt;
    } else {
      traj.samples[j].u.omega = (count > 1) ? traj.samples[j - 1].u.omega : 0.0;
    }
  }
  return traj;
}

}  // namespace resnmpc
