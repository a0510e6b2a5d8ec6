#include "resnmpc/types.hpp"

#include <cmath>

namespace resnmpc {

double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a <= 0.0) a += 2.0 * kPi;
  return a - kPi;
}

Eigen::Vector4d State::to_vector() const {
  return Eigen::Vector4d(p.x(), p.y(), p.z(), alpha);
}

State State::from_vector(const Eigen::Vector4d& v) {
  State s;
  s.p = v.head<3>();
  s.alpha = wrap_angle(v[3]);
  return s;
}

bool State::is_finite() const {
  return p.allFinite() && std::isfinite(alpha);
}

Eigen::Vector4d ControlInput::to_vector() const {
  return Eigen::Vector4d(v.x(), v.y(), v.z(), omega);
}

ControlInput ControlInput::from_vector(const Eigen::Vector4d& u) {
  ControlInput c;
  c.v = u.head<3>();
  c.omega = u[3];
  return c;
}

bool ControlInput::is_finite() const {
  return v.allFinite() && std::isfinite(omega);
}

ResidualSelector ResidualSelector::position_rows() {
  ResidualSelector s;
  s.B.topRows<3>() = Eigen::Matrix3d::Identity();
  return s;
}

ResidualSelector ResidualSelector::none() { return ResidualSelector{}; }

bool ResidualSelector::is_valid() const {
  for (int c = 0; c < 3; ++c) {
    int nonzero = 0;
    for (int r = 0; r < 4; ++r) {
      const double e = B(r, c);
      if (e != 0.0 && e != 1.0) return false;
      if (e == 1.0) ++nonzero;
    }
    if (nonzero > 1) return false;
  }
  return true;
}

}  // namespace resnmpc
