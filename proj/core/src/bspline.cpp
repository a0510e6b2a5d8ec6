#include "resnmpc/bspline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace resnmpc {

UniformCubicBspline::UniformCubicBspline(std::vector<Eigen::Vector3d> pts)
    : points_(std::move(pts)) {
  if (points_.size() < 4) {
    throw std::invalid_argument("UniformCubicBspline: need >= 4 control points");
  }
}

void UniformCubicBspline::segment_coords(double s, int* seg, double* u) const {
  s = std::clamp(s, 0.0, max_param());
  *seg = std::min(static_cast<int>(std::floor(s)), num_segments() - 1);
  *u = s - static_cast<double>(*seg);
}

Eigen::Vector3d UniformCubicBspline::position(double s) const {
  int j;
  double u;
  segment_coords(s, &j, &u);
  const double u2 = u * u, u3 = u2 * u;
  const double b0 = (1.0 - u) * (1.0 - u) * (1.0 - u) / 6.0;
  const double b1 = (3.0 * u3 - 6.0 * u2 + 4.0) / 6.0;
  const double b2 = (-3.0 * u3 + 3.0 * u2 + 3.0 * u + 1.0) / 6.0;
  const double b3 = u3 / 6.0;
  return b0 * points_[j] + b1 * points_[j + 1] + b2 * points_[j + 2] +
         b3 * points_[j + 3];
}

Eigen::Vector3d UniformCubicBspline::velocity(double s) const {
  int j;
  double u;
  segment_coords(s, &j, &u);
  const double u2 = u * u;
  const double d0 = -(1.0 - u) * (1.0 - u) / 2.0;
  const double d1 = (3.0 * u2 - 4.0 * u) / 2.0;
  const double d2 = (-3.0 * u2 + 2.0 * u + 1.0) / 2.0;
  const double d3 = u2 / 2.0;
  return d0 * points_[j] + d1 * points_[j + 1] + d2 * points_[j + 2] +
         d3 * points_[j + 3];
}

Eigen::Vector3d UniformCubicBspline::acceleration(double s) const {
  int j;
  double u;
  segment_coords(s, &j, &u);
  const double a0 = 1.0 - u;
  const double a1 = 3.0 * u - 2.0;
  const double a2 = -3.0 * u + 1.0;
  const double a3 = u;
  return a0 * points_[j] + a1 * points_[j + 1] + a2 * points_[j + 2] +
         a3 * points_[j + 3];
}

}  // namespace resnmpc
