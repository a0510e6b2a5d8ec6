#include <cmath>
#include <random>

#include "doctest.h"
#include "resnmpc/dynamics.hpp"
#include "resnmpc/types.hpp"

using namespace resnmpc;

namespace {

State make_state(double px, double py, double pz, double alpha) {
  State s;
  s.p = Eigen::Vector3d(px, py, pz);
  s.alpha = alpha;
  return s;
}

ControlInput make_control(double vx, double vy, double vz, double omega) {
  ControlInput u;
  u.v = Eigen::Vector3d(vx, vy, vz);
  u.omega = omega;
  return u;
}

}  // namespace

TEST_CASE("wrap_angle maps into (-pi, pi]") {
  CHECK(wrap_angle(0.0) == doctest::Approx(0.0));
  CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(3.0 * kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(2.0 * kPi + 0.25) == doctest::Approx(0.25));
  CHECK(wrap_angle(-2.0 * kPi - 0.25) == doctest::Approx(-0.25));
}

TEST_CASE("f_norm identity rotation") {
  const Eigen::Vector4d dx = f_norm(make_state(0, 0, 0, 0), make_control(1, 0, 0, 0));
  CHECK(dx[0] == doctest::Approx(1.0));
  CHECK(dx[1] == doctest::Approx(0.0));
  CHECK(dx[2] == doctest::Approx(0.0));
  CHECK(dx[3] == doctest::Approx(0.0));
}

TEST_CASE("f_norm quarter turn") {
  const Eigen::Vector4d dx =
      f_norm(make_state(0, 0, 0, kPi / 2.0), make_control(1, 0, 0, 0));
  CHECK(dx[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(dx[1] == doctest::Approx(1.0));
}

TEST_CASE("f_norm 45-degree yaw with yaw rate") {
  const Eigen::Vector4d dx =
      f_norm(make_state(0, 0, 0, kPi / 4.0), make_control(1, 1, 0, 0.2));
  CHECK(dx[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(dx[1] == doctest::Approx(std::sqrt(2.0)));
  CHECK(dx[2] == doctest::Approx(0.0));
  CHECK(dx[3] == doctest::Approx(0.2));
}

TEST_CASE("f_norm rejects non-finite input") {
  State bad = make_state(0, 0, 0, 0);
  bad.p.x() = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(f_norm(bad, ControlInput{}), std::domain_error);
}

TEST_CASE("f_norm position rows are linear in v at fixed yaw") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const State x = make_state(dist(rng), dist(rng), dist(rng), dist(rng) / 2.0);
    ControlInput u = make_control(dist(rng), dist(rng), dist(rng), dist(rng));
    const double a = dist(rng);
    ControlInput ua = u;
    ua.v *= a;
    const Eigen::Vector4d d1 = f_norm(x, u);
    const Eigen::Vector4d d2 = f_norm(x, ua);
    CHECK((d2.head<3>() - a * d1.head<3>()).norm() == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("f_norm jacobians match finite differences") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(-1.5, 1.5);
  const double h = 1e-6;
  for (int trial = 0; trial < 10; ++trial) {
    const State x = make_state(dist(rng), dist(rng), dist(rng), dist(rng));
    const ControlInput u = make_control(dist(rng), dist(rng), dist(rng), dist(rng));
    Eigen::Matrix4d jx, ju;
    f_norm_jacobians(x, u, &jx, &ju);
    for (int k = 0; k < 4; ++k) {
      Eigen::Vector4d xp = x.to_vector(), xm = x.to_vector();
      xp[k] += h;
      xm[k] -= h;
      const Eigen::Vector4d fd =
          (f_norm(State{xp.head<3>(), xp[3]}, u) - f_norm(State{xm.head<3>(), xm[3]}, u)) /
          (2.0 * h);
      CHECK((fd - jx.col(k)).norm() < 1e-6);

      Eigen::Vector4d up = u.to_vector(), um = u.to_vector();
      up[k] += h;
      um[k] -= h;
      const Eigen::Vector4d fdu =
          (f_norm(x, ControlInput::from_vector(up)) -
           f_norm(x, ControlInput::from_vector(um))) /
          (2.0 * h);
      CHECK((fdu - ju.col(k)).norm() < 1e-6);
    }
  }
}

TEST_CASE("rk4_step constant derivative is exact") {
  NominalDynamics dyn;
  const State x1 = rk4_step(dyn, make_state(0, 0, 0, 0), make_control(1, 0, 0, 0), 0.1);
  CHECK(x1.p.x() == doctest::Approx(0.1));
  CHECK(x1.p.y() == doctest::Approx(0.0));
  CHECK(x1.alpha == doctest::Approx(0.0));
}

TEST_CASE("rk4_step pure rotation") {
  NominalDynamics dyn;
  const State x1 = rk4_step(dyn, make_state(1, 2, 3, 0), make_control(0, 0, 0, 1), 0.1);
  CHECK(x1.alpha == doctest::Approx(0.1));
  CHECK((x1.p - Eigen::Vector3d(1, 2, 3)).norm() == doctest::Approx(0.0));
}

namespace {

// Reference trajectory for the yaw-coupled case, integrated at dt = 1e-5.
State integrate_reference(const State& x0, const ControlInput& u, double t_end) {
  NominalDynamics dyn;
  const double dt = 1e-5;
  State x = x0;
  const long n = std::lround(t_end / dt);
  for (long i = 0; i < n; ++i) x = rk4_step(dyn, x, u, dt);
  return x;
}

double endpoint_error(double dt, const State& x0, const ControlInput& u,
                      const State& x_ref, double t_end) {
  NominalDynamics dyn;
  State x = x0;
  const long n = std::lround(t_end / dt);
  for (long i = 0; i < n; ++i) x = rk4_step(dyn, x, u, dt);
  return (x.p - x_ref.p).norm();
}

}  // namespace

TEST_CASE("rk4_step shows 4th-order convergence on the yaw-coupled case") {
  const State x0 = make_state(0, 0, 0, 0);
  const ControlInput u = make_control(1, 0, 0, 1);
  const double t_end = 1.0;
  const State x_ref = integrate_reference(x0, u, t_end);

  const double e1 = endpoint_error(0.2, x0, u, x_ref, t_end);
  const double e2 = endpoint_error(0.1, x0, u, x_ref, t_end);
  const double e3 = endpoint_error(0.05, x0, u, x_ref, t_end);

  const double r1 = e1 / e2;
  const double r2 = e2 / e3;
  CHECK(r1 > 12.0);
  CHECK(r1 < 20.0);
  CHECK(r2 > 12.0);
  CHECK(r2 < 20.0);
}

TEST_CASE("rk4 discrete jacobians match finite differences") {
  NominalDynamics dyn;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const double h = 1e-6;
  for (int trial = 0; trial < 10; ++trial) {
    const State x = make_state(dist(rng), dist(rng), dist(rng), dist(rng));
    const ControlInput u = make_control(dist(rng), dist(rng), dist(rng), dist(rng));
    const auto step = rk4_step_with_jacobians(dyn, x, u, 0.1);
    for (int k = 0; k < 4; ++k) {
      Eigen::Vector4d xp = x.to_vector(), xm = x.to_vector();
      xp[k] += h;
      xm[k] -= h;
      const Eigen::Vector4d fd =
          (rk4_step(dyn, State{xp.head<3>(), xp[3]}, u, 0.1).to_vector() -
           rk4_step(dyn, State{xm.head<3>(), xm[3]}, u, 0.1).to_vector()) /
          (2.0 * h);
      CHECK((fd - step.jac_x.col(k)).norm() < 1e-7);

      Eigen::Vector4d up = u.to_vector(), um = u.to_vector();
      up[k] += h;
      um[k] -= h;
      const Eigen::Vector4d fdu =
          (rk4_step(dyn, x, ControlInput::from_vector(up), 0.1).to_vector() -
           rk4_step(dyn, x, ControlInput::from_vector(um), 0.1).to_vector()) /
          (2.0 * h);
      CHECK((fdu - step.jac_u.col(k)).norm() < 1e-7);
    }
  }
}

TEST_CASE("ResidualSelector validation") {
  CHECK(ResidualSelector::position_rows().is_valid());
  CHECK(ResidualSelector::none().is_valid());
  ResidualSelector bad;
  bad.B(0, 0) = 0.5;
  CHECK_FALSE(bad.is_valid());
}
