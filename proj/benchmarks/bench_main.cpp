#include <benchmark/benchmark.h>

#include <random>

#include "resnmpc/dataset.hpp"
#include "resnmpc/dynamics.hpp"
#include "resnmpc/nmpc.hpp"
#include "resnmpc/plant.hpp"
#include "resnmpc/sgp.hpp"

using namespace resnmpc;

namespace {

GpDataset synthetic_residuals(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uv(-1.5, 1.5);
  std::normal_distribution<double> noise(0.0, 0.05);
  Eigen::MatrixXd x(n, 1);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = uv(rng);
    y[i] = -0.7 * x(i, 0) - 0.3 * x(i, 0) * std::abs(x(i, 0)) + noise(rng);
  }
  return GpDataset::from_raw(std::move(x), std::move(y));
}

SgpModel trained_model(int m) {
  static const GpDataset data = synthetic_residuals(600, 7);
  SgpTrainOptions opts;
  opts.seed = 1;
  opts.bias = 0.5;
  opts.max_iters = 150;
  return train_sgp(data, m, 0.5, KernelHyperparams{0.5, 0.5, 0.05}, opts).model;
}

SgpModelSet trained_set(int m) {
  SgpModelSet set;
  const SgpModel model = trained_model(m);
  set.axes = {model, model, model};
  set.delta_v = 0.1;
  return set;
}

ReferenceSlice straight_slice(int n, double dt) {
  ReferenceSlice ref;
  for (int i = 0; i <= n; ++i) {
    State s;
    s.p = Eigen::Vector3d(dt * i, 0.0, 1.0);
    ref.states.push_back(s);
  }
  for (int i = 0; i < n; ++i) {
    ControlInput u;
    u.v = Eigen::Vector3d(1.0, 0.0, 0.0);
    ref.controls.push_back(u);
  }
  return ref;
}

void BM_Rk4Step(benchmark::State& state) {
  NominalDynamics dyn;
  State x;
  ControlInput u;
  u.v = Eigen::Vector3d(1.0, 0.3, -0.1);
  u.omega = 0.4;
  for (auto _ : state) {
    x = rk4_step(dyn, x, u, 0.1);
    benchmark::DoNotOptimize(x);
  }
}
BENCHMARK(BM_Rk4Step);

void BM_PlantStep(benchmark::State& state) {
  PlantConfig cfg;
  PlantState ps;
  ControlInput u;
  u.v = Eigen::Vector3d(1.2, 0.0, 0.2);
  for (auto _ : state) {
    ps = plant_step(cfg, ps, u, 0.1);
    benchmark::DoNotOptimize(ps);
  }
}
BENCHMARK(BM_PlantStep);

void BM_SgpPredict(benchmark::State& state) {
  const SgpModel model = trained_model(static_cast<int>(state.range(0)));
  double x = -1.0;
  for (auto _ : state) {
    const auto pred = model.predict(x);
    benchmark::DoNotOptimize(pred);
    x = x < 1.0 ? x + 1e-4 : -1.0;
  }
}
BENCHMARK(BM_SgpPredict)->Arg(5)->Arg(10)->Arg(20)->Arg(30)->Arg(50);

void BM_ElboGradient(benchmark::State& state) {
  const GpDataset data = synthetic_residuals(static_cast<int>(state.range(0)), 3);
  const KernelHyperparams hyp{0.5, 0.4, 0.05};
  const Eigen::MatrixXd x_m =
      select_inducing_points(data, static_cast<int>(state.range(1)), 0.5, 2);
  for (auto _ : state) {
    const auto grad = sgp_elbo_with_gradient(data, hyp, x_m);
    benchmark::DoNotOptimize(grad);
  }
}
BENCHMARK(BM_ElboGradient)->Args({500, 10})->Args({500, 30})->Args({2000, 30});

void BM_NmpcSolveNominal(benchmark::State& state) {
  NmpcConfig cfg;
  cfg.N = static_cast<int>(state.range(0));
  const ReferenceSlice slice = straight_slice(cfg.N, cfg.dt);
  State x0 = slice.states[0];
  x0.p.y() += 0.1;
  NmpcSolver solver(cfg);
  for (auto _ : state) {
    const auto sol = solver.solve(x0, slice, {});
    benchmark::DoNotOptimize(sol);
  }
}
BENCHMARK(BM_NmpcSolveNominal)->Arg(10)->Arg(15)->Arg(30);

void BM_NmpcSolveAugmented(benchmark::State& state) {
  NmpcConfig cfg;
  const SgpModelSet set = trained_set(static_cast<int>(state.range(0)));
  const ReferenceSlice slice = straight_slice(cfg.N, cfg.dt);
  State x0 = slice.states[0];
  x0.p.y() += 0.1;
  NmpcSolver solver(cfg);
  for (auto _ : state) {
    const auto sol = solver.solve(x0, slice, {}, &set);
    benchmark::DoNotOptimize(sol);
  }
}
BENCHMARK(BM_NmpcSolveAugmented)->Arg(5)->Arg(10)->Arg(20)->Arg(30)->Arg(50);

void BM_NmpcSolveObstacles(benchmark::State& state) {
  NmpcConfig cfg;
  cfg.d_o = 0.5;
  const ReferenceSlice slice = straight_slice(cfg.N, cfg.dt);
  std::vector<Obstacle> obstacles{{Eigen::Vector3d(0.8, 0.05, 1.0)}};
  NmpcSolver solver(cfg);
  for (auto _ : state) {
    const auto sol = solver.solve(slice.states[0], slice, obstacles);
    benchmark::DoNotOptimize(sol);
  }
}
BENCHMARK(BM_NmpcSolveObstacles);

}  // namespace

BENCHMARK_MAIN();
