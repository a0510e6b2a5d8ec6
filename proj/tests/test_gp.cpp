#include <cmath>
#include <random>

#include "doctest.h"
#include "resnmpc/errors.hpp"
#include "resnmpc/gp.hpp"
#include "resnmpc/types.hpp"

using namespace resnmpc;

namespace {

GpDataset dataset_1d(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  Eigen::MatrixXd xm(x.size(), 1);
  xm.col(0) = x;
  return GpDataset::from_raw(xm, y);
}

// Dense brute-force log marginal likelihood: explicit inverse and
// determinant, independent of the Cholesky code path.
double brute_force_lml(const GpDataset& data, const KernelHyperparams& hyp) {
  const int n = data.n();
  Eigen::MatrixXd k(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      k(i, j) = se_kernel(data.X.row(i).transpose(), data.X.row(j).transpose(), hyp);
    }
  }
  k.diagonal().array() += hyp.sigma_n * hyp.sigma_n;
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(k);
  const double quad = data.y.dot(lu.solve(data.y));
  const double log_det = std::log(std::abs(lu.determinant()));
  return -0.5 * quad - 0.5 * log_det - 0.5 * n * std::log(2.0 * kPi);
}

}  // namespace

TEST_CASE("se_kernel closed-form values") {
  KernelHyperparams hyp;
  hyp.sigma_f = 1.0;
  hyp.length_scale = 1.0;
  CHECK(se_kernel(0.0, 0.0, hyp) == doctest::Approx(1.0));
  CHECK(se_kernel(0.0, 1.0, hyp) == doctest::Approx(std::exp(-0.5)));

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> dist(-3.0, 3.0);
  for (int i = 0; i < 50; ++i) {
    const double a = dist(rng), b = dist(rng);
    CHECK(se_kernel(a, b, hyp) == doctest::Approx(se_kernel(b, a, hyp)));
  }
}

TEST_CASE("fit on a single centered point predicts the data mean far away") {
  const auto data = dataset_1d(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1));
  KernelHyperparams hyp;
  const auto model = ExactGpModel::fit(data, hyp);
  const auto pred = model.predict(100.0);
  CHECK(pred.mean == doctest::Approx(0.0));
  CHECK(pred.variance == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("near-noiseless fit interpolates the targets") {
  Eigen::VectorXd x(3), y(3);
  x << -1.0, 0.2, 1.5;
  y << 0.3, -0.4, 0.9;
  const auto data = dataset_1d(x, y);
  KernelHyperparams hyp;
  hyp.sigma_n = 1e-6;
  const auto model = ExactGpModel::fit(data, hyp);

  // Independent oracle: solve the 3x3 noisy Gram system directly.
  Eigen::Matrix3d k;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) k(i, j) = se_kernel(x[i], x[j], hyp);
  k.diagonal().array() += hyp.sigma_n * hyp.sigma_n;
  const Eigen::Vector3d alpha = k.inverse() * data.y;

  for (int i = 0; i < 3; ++i) {
    const auto pred = model.predict(x[i]);
    CHECK(pred.mean == doctest::Approx(y[i]).epsilon(1e-4));
    Eigen::Vector3d ks;
    for (int j = 0; j < 3; ++j) ks[j] = se_kernel(x[i], x[j], hyp);
    CHECK(pred.mean == doctest::Approx(data.y_mean + ks.dot(alpha)).epsilon(1e-9));
  }
}

TEST_CASE("duplicate inputs with zero noise raise a singular-kernel error") {
  Eigen::VectorXd x(2), y(2);
  x << 0.5, 0.5;
  y << 1.0, 2.0;
  KernelHyperparams hyp;
  hyp.sigma_n = 0.0;
  CHECK_THROWS_AS(ExactGpModel::fit(dataset_1d(x, y), hyp), SolverError);
}

TEST_CASE("prior reversion far from the data") {
  Eigen::VectorXd x(4), y(4);
  x << -1.0, 0.0, 0.5, 1.0;
  y << 2.0, 2.5, 3.0, 2.4;
  KernelHyperparams hyp;
  hyp.length_scale = 0.7;
  const auto data = dataset_1d(x, y);
  const auto model = ExactGpModel::fit(data, hyp);
  const auto far = model.predict(1.0 + 10.0 * hyp.length_scale);
  CHECK(far.mean == doctest::Approx(data.y_mean).epsilon(0.01));
  CHECK(far.variance == doctest::Approx(hyp.sigma_f * hyp.sigma_f).epsilon(0.01));

  // Posterior contraction: variance never exceeds the prior.
  for (double xs = -3.0; xs <= 3.0; xs += 0.1) {
    CHECK(model.predict(xs).variance <= hyp.sigma_f * hyp.sigma_f + 1e-9);
  }
}

TEST_CASE("log marginal likelihood closed form for n = 1") {
  const auto data = dataset_1d(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1));
  KernelHyperparams hyp;
  hyp.sigma_f = 1.0;
  hyp.sigma_n = 1.0;
  const auto model = ExactGpModel::fit(data, hyp);
  const double expected = -0.5 * std::log(2.0) - 0.5 * std::log(2.0 * kPi);
  CHECK(model.log_marginal_likelihood() == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("log marginal likelihood matches the dense brute-force oracle") {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 5 + trial * 3;
    Eigen::VectorXd x(n), y(n);
    for (int i = 0; i < n; ++i) {
      x[i] = 3.0 * gauss(rng);
      y[i] = gauss(rng);
    }
    const auto data = dataset_1d(x, y);
    KernelHyperparams hyp;
    hyp.sigma_f = 0.8;
    hyp.length_scale = 0.9;
    hyp.sigma_n = 0.3;
    const auto model = ExactGpModel::fit(data, hyp);
    CHECK(model.log_marginal_likelihood() ==
          doctest::Approx(brute_force_lml(data, hyp)).epsilon(1e-8));
  }
}

TEST_CASE("inflating the noise on well-fit data lowers the likelihood") {
  Eigen::VectorXd x(20), y(20);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss(0.0, 0.02);
  for (int i = 0; i < 20; ++i) {
    x[i] = -2.0 + 0.2 * i;
    y[i] = std::sin(x[i]) + gauss(rng);
  }
  const auto data = dataset_1d(x, y);
  KernelHyperparams hyp;
  hyp.sigma_n = 0.05;
  const double fit_lml = ExactGpModel::fit(data, hyp).log_marginal_likelihood();
  hyp.sigma_n = 0.5;
  const double loose_lml = ExactGpModel::fit(data, hyp).log_marginal_likelihood();
  CHECK(fit_lml > loose_lml);
}

TEST_CASE("lml gradient matches central finite differences") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n = 15;
  Eigen::VectorXd x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x[i] = 2.0 * gauss(rng);
    y[i] = std::sin(x[i]) + 0.1 * gauss(rng);
  }
  const auto data = dataset_1d(x, y);

  std::uniform_real_distribution<double> logu(-0.7, 0.7);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::Vector3d lp(logu(rng), logu(rng), logu(rng) - 1.0);
    const auto hyp = KernelHyperparams::from_log(lp);
    const auto model = ExactGpModel::fit(data, hyp);
    const Eigen::Vector3d grad = model.log_marginal_likelihood_gradient();
    const double h = 1e-5;
    for (int k = 0; k < 3; ++k) {
      Eigen::Vector3d lpp = lp, lpm = lp;
      lpp[k] += h;
      lpm[k] -= h;
      const double fp =
          ExactGpModel::fit(data, KernelHyperparams::from_log(lpp)).log_marginal_likelihood();
      const double fm =
          ExactGpModel::fit(data, KernelHyperparams::from_log(lpm)).log_marginal_likelihood();
      const double fd = (fp - fm) / (2.0 * h);
      CHECK(std::abs(grad[k] - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("predictive mean is linear in the targets") {
  Eigen::VectorXd x(6), y(6);
  x << -2, -1, 0, 1, 2, 3;
  y << 0.5, -0.2, 0.9, 1.4, -0.7, 0.3;
  KernelHyperparams hyp;
  const auto m1 = ExactGpModel::fit(dataset_1d(x, y), hyp);
  const auto m2 = ExactGpModel::fit(dataset_1d(x, 2.0 * y), hyp);
  for (double xs = -2.5; xs < 3.5; xs += 0.5) {
    const auto p1 = m1.predict(xs);
    const auto p2 = m2.predict(xs);
    CHECK(p2.mean == doctest::Approx(2.0 * p1.mean).epsilon(1e-10));
    CHECK(p2.variance == doctest::Approx(p1.variance).epsilon(1e-12));
  }
}

TEST_CASE("posterior mean interpolates as noise vanishes") {
  Eigen::VectorXd x(8), y(8);
  for (int i = 0; i < 8; ++i) {
    x[i] = -1.4 + 0.4 * i;
    y[i] = std::cos(2.0 * x[i]);
  }
  KernelHyperparams hyp;
  hyp.sigma_n = 1e-6;
  const auto model = ExactGpModel::fit(dataset_1d(x, y), hyp);
  for (int i = 0; i < 8; ++i) {
    CHECK(model.predict(x[i]).mean == doctest::Approx(y[i]).epsilon(1e-3));
  }
}

TEST_CASE("hyperparameter recovery on synthetic data") {
  // Draw from a GP with known hyperparameters and recover the length scale.
  const KernelHyperparams truth{1.0, 0.5, 0.1};
  const int n = 200;
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = -3.0 + 6.0 * (i + 0.5) / n;
  Eigen::MatrixXd xm(n, 1);
  xm.col(0) = x;
  Eigen::MatrixXd k = se_kernel_matrix(xm, xm, truth);
  k.diagonal().array() += 1e-10;
  const Eigen::MatrixXd l = Eigen::LLT<Eigen::MatrixXd>(k).matrixL();
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i) z[i] = gauss(rng);
  Eigen::VectorXd y = l * z;
  for (int i = 0; i < n; ++i) y[i] += truth.sigma_n * gauss(rng);

  KernelHyperparams init{0.5, 1.5, 0.3};
  HyperparamFitReport report;
  const auto fitted = optimize_hyperparams(dataset_1d(x, y), init, &report);
  CHECK(fitted.length_scale > 0.7 * truth.length_scale);
  CHECK(fitted.length_scale < 1.3 * truth.length_scale);

  // Restarting at the optimum terminates immediately.
  HyperparamFitReport again;
  optimize_hyperparams(dataset_1d(x, y), fitted, &again);
  CHECK(again.iters <= 1);
}
