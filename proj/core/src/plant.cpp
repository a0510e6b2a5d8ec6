#include "resnmpc/plant.hpp"

#include <cmath>
#include <stdexcept>

#include "resnmpc/dynamics.hpp"

namespace resnmpc {

namespace {

using Vector7d = Eigen::Matrix<double, 7, 1>;

// Joint ODE on [p, alpha, v].
Vector7d plant_rhs(const PlantConfig& cfg, const Vector7d& z,
                   const ControlInput& u) {
  Vector7d dz;
  const Eigen::Vector3d v = z.tail<3>();
  dz.head<3>() = yaw_rotation(z[3]) * v;
  dz[3] = u.omega;
  dz.tail<3>() = (u.v - v) / cfg.tau - cfg.c_d * v.norm() * v;
  return dz;
}

}  // namespace

void PlantConfig::validate() const {
  if (!(tau > 0.0)) throw std::invalid_argument("PlantConfig: tau must be > 0");
  if (c_d < 0.0) throw std::invalid_argument("PlantConfig: c_d must be >= 0");
  if (!(dt_sim > 0.0)) {
    throw std::invalid_argument("PlantConfig: dt_sim must be > 0");
  }
}

PlantState plant_step(const PlantConfig& cfg, const PlantState& s,
                      const ControlInput& u, double dt) {
  cfg.validate();
  if (!s.x.is_finite() || !s.v.allFinite() || !u.is_finite()) {
    throw std::domain_error("plant_step: non-finite input");
  }
  const double ratio = dt / cfg.dt_sim;
  const long n_sub = std::lround(ratio);
  if (n_sub < 1 || std::abs(ratio - static_cast<double>(n_sub)) > 1e-9 * ratio) {
    throw std::invalid_argument(
        "plant_step: dt must be a positive integer multiple of dt_sim");
  }

  // RK4 needs the micro step well below the lag time constant to stay stable.
  const long n_micro = std::min<long>(
      4000, std::max<long>(1, static_cast<long>(std::ceil(cfg.dt_sim / (0.5 * cfg.tau)))));
  const double h = cfg.dt_sim / static_cast<double>(n_micro);

  Vector7d z;
  z.head<3>() = s.x.p;
  z[3] = s.x.alpha;
  z.tail<3>() = s.v;

  for (long i = 0; i < n_sub * n_micro; ++i) {
    const Vector7d k1 = plant_rhs(cfg, z, u);
    const Vector7d k2 = plant_rhs(cfg, z + 0.5 * h * k1, u);
    const Vector7d k3 = plant_rhs(cfg, z + 0.5 * h * k2, u);
    const Vector7d k4 = plant_rhs(cfg, z + h * k3, u);
    z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

  PlantState out;
  out.x.p = z.head<3>();
  out.x.alpha = wrap_angle(z[3]);
  out.v = z.tail<3>();
  return out;
}

}  // namespace resnmpc
