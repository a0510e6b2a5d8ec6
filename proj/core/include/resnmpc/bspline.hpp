#pragma once

#include <Eigen/Dense>
#include <vector>

namespace resnmpc {

// Uniform cubic B-spline over 3-D control points. The curve parameter runs
// over [0, num_segments] with one knot interval per unit.
class UniformCubicBspline {
 public:
  explicit UniformCubicBspline(std::vector<Eigen::Vector3d> control_points);

  int num_segments() const { return static_cast<int>(points_.size()) - 3; }
  double max_param() const { return static_cast<double>(num_segments()); }

  Eigen::Vector3d position(double s) const;
  // Derivatives with respect to the parameter.
  Eigen::Vector3d velocity(double s) const;
  Eigen::Vector3d acceleration(double s) const;

  const std::vector<Eigen::Vector3d>& control_points() const { return points_; }

 private:
  void segment_coords(double s, int* seg, double* u) const;
  std::vector<Eigen::Vector3d> points_;
};

}  // namespace resnmpc
