#include "resnmpc/sgp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "resnmpc/errors.hpp"
#include "resnmpc/optimizer.hpp"
#include "resnmpc/types.hpp"

namespace resnmpc {

namespace {

// Shared factorizations behind the collapsed bound. With
// A = L_m^{-1} K_mn / sigma_n and B = I + A A^T:
//   log|Q_nn + sigma^2 I| = n log sigma^2 + log|B|
//   (Q_nn + sigma^2 I)^{-1} = (I - A^T B^{-1} A) / sigma^2
struct ElboFactors {
  Eigen::MatrixXd kmn;      // m x n, noise free
  Eigen::MatrixXd kmm;      // m x m, noise free
  Eigen::MatrixXd chol_m;   // L_m of (kmm + jitter I)
  Eigen::MatrixXd a;        // m x n
  Eigen::MatrixXd chol_b;   // L_B of B = I + A A^T
  Eigen::VectorXd ay;       // A y
  Eigen::VectorXd c;        // L_B^{-1} A y
  double jitter = 0.0;
};

Eigen::MatrixXd cholesky_jittered(const Eigen::MatrixXd& mat, double sigma_f,
                                  double* jitter_out) {
  double jitter = 0.0;
  double step = 1e-10 * sigma_f * sigma_f;
  for (int attempt = 0; attempt <= 7; ++attempt) {
    Eigen::MatrixXd k = mat;
    if (jitter > 0.0) k.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() == Eigen::Success) {
      if (jitter_out != nullptr) *jitter_out = jitter;
      return Eigen::MatrixXd(llt.matrixL());
    }
    jitter = (attempt == 0) ? step : jitter * 2.0;
  }
  throw SolverError("sgp: inducing kernel matrix is singular");
}

void check_inducing_inputs(const GpDataset& data, const Eigen::MatrixXd& x_m) {
  if (x_m.rows() < 1 || x_m.cols() != data.X.cols()) {
    throw std::invalid_argument("sgp: inducing inputs have wrong shape");
  }
  if (!x_m.allFinite()) {
    throw std::invalid_argument("sgp: non-finite inducing inputs");
  }
  const auto dup = find_duplicate_rows(x_m);
  if (dup.first >= 0) {
    throw SolverError("sgp: singular K_mm, duplicate inducing points " +
                      std::to_string(dup.first) + " and " +
                      std::to_string(dup.second));
  }
}

ElboFactors compute_factors(const GpDataset& data,
                            const KernelHyperparams& hyp,
                            const Eigen::MatrixXd& x_m) {
  hyp.validate();
  check_inducing_inputs(data, x_m);

  ElboFactors f;
  f.kmm = se_kernel_matrix(x_m, x_m, hyp);
  f.kmn = se_kernel_matrix(x_m, data.X, hyp);
  f.chol_m = cholesky_jittered(f.kmm, hyp.sigma_f, &f.jitter);
  f.a = f.chol_m.triangularView<Eigen::Lower>().solve(f.kmn) / hyp.sigma_n;
  Eigen::MatrixXd b =
      Eigen::MatrixXd::Identity(x_m.rows(), x_m.rows()) + f.a * f.a.transpose();
  f.chol_b = cholesky_jittered(b, 1.0, nullptr);
  f.ay = f.a * data.y;
  f.c = f.chol_b.triangularView<Eigen::Lower>().solve(f.ay);
  return f;
}

double elbo_from_factors(const GpDataset& data, const KernelHyperparams& hyp,
                         const ElboFactors& f) {
  const double n = static_cast<double>(data.n());
  const double sn2 = hyp.sigma_n * hyp.sigma_n;
  const double log_det =
      n * std::log(sn2) + 2.0 * f.chol_b.diagonal().array().log().sum();
  const double quad = (data.y.squaredNorm() - f.c.squaredNorm()) / sn2;
  const double trace_knn = n * hyp.sigma_f * hyp.sigma_f;
  const double trace_qnn = sn2 * f.a.squaredNorm();
  return -0.5 * n * std::log(2.0 * kPi) - 0.5 * log_det - 0.5 * quad -
         0.5 * (trace_knn - trace_qnn) / sn2;
}

}  // namespace

double sgp_elbo(const GpDataset& data, const KernelHyperparams& hyp,
                const Eigen::MatrixXd& x_m) {
  const ElboFactors f = compute_factors(data, hyp, x_m);
  return elbo_from_factors(data, hyp, f);
}

ElboGradient sgp_elbo_with_gradient(const GpDataset& data,
                                    const KernelHyperparams& hyp,
                                    const Eigen::MatrixXd& x_m) {
  const int n = data.n();
  const int m = static_cast<int>(x_m.rows());
  const double sn2 = hyp.sigma_n * hyp.sigma_n;
  const double l2 = hyp.length_scale * hyp.length_scale;

  const ElboFactors f = compute_factors(data, hyp, x_m);

  ElboGradient out;
  out.value = elbo_from_factors(data, hyp, f);

  // t = B^{-1} A y, alpha = G^{-1} y.
  Eigen::VectorXd t = f.c;
  f.chol_b.triangularView<Eigen::Lower>().transpose().solveInPlace(t);
  const Eigen::VectorXd alpha = (data.y - f.a.transpose() * t) / sn2;

  // P = K_mm^{-1} K_mn, stored transposed: P^T = K_nm L_m^{-T} L_m^{-1}.
  Eigen::MatrixXd pt = hyp.sigma_n * f.a.transpose();
  f.chol_m.triangularView<Eigen::Lower>().solveInPlace<Eigen::OnTheRight>(pt);

  // G^{-1} P^T via the Woodbury form.
  const Eigen::MatrixXd apt = f.a * pt;  // m x m
  Eigen::MatrixXd binv_apt = f.chol_b.triangularView<Eigen::Lower>().solve(apt);
  f.chol_b.triangularView<Eigen::Lower>().transpose().solveInPlace(binv_apt);
  const Eigen::MatrixXd ginv_pt = (pt - f.a.transpose() * binv_apt) / sn2;

  const Eigen::VectorXd p_alpha = pt.transpose() * alpha;  // P alpha, m
  const Eigen::MatrixXd m_pt = ginv_pt - alpha * p_alpha.transpose();  // M P^T

  // Adjoints of the kernel blocks.
  const Eigen::MatrixXd w_nm = -m_pt + pt / sn2;  // dL/dK_nm, n x m
  const Eigen::MatrixXd pmpt = pt.transpose() * ginv_pt - p_alpha * p_alpha.transpose();
  const Eigen::MatrixXd ppt = pt.transpose() * pt;
  const Eigen::MatrixXd w_mm = 0.5 * pmpt - ppt / (2.0 * sn2);  // dL/dK_mm

  // tr(M) = tr(G^{-1}) - alpha^T alpha.
  Eigen::MatrixXd lb_inv = Eigen::MatrixXd::Identity(m, m);
  f.chol_b.triangularView<Eigen::Lower>().solveInPlace(lb_inv);
  const double tr_binv = lb_inv.squaredNorm();
  const double tr_ginv = (static_cast<double>(n) - static_cast<double>(m) + tr_binv) / sn2;
  const double tr_m = tr_ginv - alpha.squaredNorm();

  const double trace_gap = static_cast<double>(n) * hyp.sigma_f * hyp.sigma_f -
                           sn2 * f.a.squaredNorm();
  const double dl_dsn2 = -0.5 * tr_m + trace_gap / (2.0 * sn2 * sn2);

  const Eigen::MatrixXd knm = f.kmn.transpose();
  const Eigen::MatrixXd d2_nm = squared_distances(data.X, x_m);
  const Eigen::MatrixXd d2_mm = squared_distances(x_m, x_m);

  out.log_hyp[0] = 2.0 * (w_nm.array() * knm.array()).sum() +
                   2.0 * (w_mm.array() * f.kmm.array()).sum() -
                   static_cast<double>(n) * hyp.sigma_f * hyp.sigma_f / sn2;
  out.log_hyp[1] = (w_nm.array() * knm.array() * d2_nm.array()).sum() / l2 +
                   (w_mm.array() * f.kmm.array() * d2_mm.array()).sum() / l2;
  out.log_hyp[2] = dl_dsn2 * 2.0 * sn2;

  // Inducing-location gradient.
  const Eigen::MatrixXd c_nm = w_nm.cwiseProduct(knm);  // n x m
  const Eigen::MatrixXd c_mm = w_mm.cwiseProduct(f.kmm);
  out.x_m.resize(m, x_m.cols());
  const Eigen::MatrixXd ctx = c_nm.transpose() * data.X;        // m x d
  const Eigen::VectorXd c_nm_colsum = c_nm.colwise().sum();     // m
  const Eigen::MatrixXd cmz = c_mm * x_m;                       // m x d
  const Eigen::VectorXd c_mm_rowsum = c_mm.rowwise().sum();     // m
  for (int j = 0; j < m; ++j) {
    out.x_m.row(j) =
        (ctx.row(j) - c_nm_colsum[j] * x_m.row(j)) / l2 +
        2.0 * (cmz.row(j) - c_mm_rowsum[j] * x_m.row(j)) / l2;
  }
  return out;
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> compute_variational_params(
    const GpDataset& data, const KernelHyperparams& hyp,
    const Eigen::MatrixXd& x_m) {
  const ElboFactors f = compute_factors(data, hyp, x_m);
  // mu = L_m B^{-1} A y / sigma_n,  A_cov = L_m B^{-1} L_m^T.
  Eigen::VectorXd binv_ay = f.c;
  f.chol_b.triangularView<Eigen::Lower>().transpose().solveInPlace(binv_ay);
  const Eigen::VectorXd mu =
      f.chol_m.triangularView<Eigen::Lower>() * binv_ay / hyp.sigma_n;

  const int m = static_cast<int>(x_m.rows());
  Eigen::MatrixXd binv = Eigen::MatrixXd::Identity(m, m);
  f.chol_b.triangularView<Eigen::Lower>().solveInPlace(binv);
  f.chol_b.triangularView<Eigen::Lower>().transpose().solveInPlace(binv);
  const Eigen::MatrixXd tmp = f.chol_m.triangularView<Eigen::Lower>() * binv;
  Eigen::MatrixXd a_cov = tmp * f.chol_m.transpose();
  a_cov = 0.5 * (a_cov + a_cov.transpose()).eval();
  return {mu, a_cov};
}

SgpModel::SgpModel(KernelHyperparams hyp, Eigen::MatrixXd x_m,
                   Eigen::VectorXd mu, Eigen::MatrixXd a_cov, double data_mean,
                   double delta_v)
    : hyp_(hyp),
      x_m_(std::move(x_m)),
      mu_(std::move(mu)),
      a_cov_(std::move(a_cov)),
      data_mean_(data_mean),
      delta_v_(delta_v) {
  hyp_.validate();
  if (x_m_.rows() != mu_.size() || a_cov_.rows() != mu_.size() ||
      a_cov_.cols() != mu_.size()) {
    throw std::invalid_argument("SgpModel: inconsistent shapes");
  }
  chol_kmm_ = cholesky_jittered(se_kernel_matrix(x_m_, x_m_, hyp_),
                                hyp_.sigma_f, nullptr);
  w_pred_ = chol_kmm_.triangularView<Eigen::Lower>().solve(mu_);
  chol_kmm_.triangularView<Eigen::Lower>().transpose().solveInPlace(w_pred_);
}

GpPrediction SgpModel::predict(
    const Eigen::Ref<const Eigen::VectorXd>& x_star) const {
  if (!trained()) throw SolverError("SgpModel: predict on untrained model");
  const int m = this->m();
  Eigen::VectorXd k_star(m);
  for (int j = 0; j < m; ++j) {
    k_star[j] = se_kernel(x_m_.row(j).transpose(), x_star, hyp_);
  }
  GpPrediction out;
  out.mean = data_mean_ + k_star.dot(w_pred_);

  const Eigen::VectorXd u =
      chol_kmm_.triangularView<Eigen::Lower>().solve(k_star);
  Eigen::VectorXd q = u;
  chol_kmm_.triangularView<Eigen::Lower>().transpose().solveInPlace(q);
  double var = hyp_.sigma_f * hyp_.sigma_f - u.squaredNorm() +
               q.dot(a_cov_ * q);
  if (var < 0.0) {
    negative_variance_counter_->fetch_add(1, std::memory_order_relaxed);
    var = 0.0;
  }
  out.variance = var;
  return out;
}

GpPrediction SgpModel::predict(double x_star) const {
  Eigen::VectorXd x(1);
  x[0] = x_star;
  return predict(x);
}

void SgpModel::predict_mean_grad(const Eigen::Ref<const Eigen::VectorXd>& x_star,
                                 double* mean, Eigen::VectorXd* grad) const {
  if (!trained()) throw SolverError("SgpModel: predict on untrained model");
  const int m = this->m();
  const double l2 = hyp_.length_scale * hyp_.length_scale;
  double acc = data_mean_;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(x_star.size());
  for (int j = 0; j < m; ++j) {
    const double k = se_kernel(x_m_.row(j).transpose(), x_star, hyp_);
    acc += w_pred_[j] * k;
    g += w_pred_[j] * k * (x_m_.row(j).transpose() - x_star) / l2;
  }
  if (mean != nullptr) *mean = acc;
  if (grad != nullptr) *grad = g;
}

std::int64_t SgpModel::negative_variance_count() const {
  return negative_variance_counter_->load(std::memory_order_relaxed);
}

namespace {

// Rows of X with exact duplicates removed (first occurrence kept).
Eigen::MatrixXd distinct_rows(const Eigen::MatrixXd& x) {
  std::vector<int> keep;
  for (int i = 0; i < x.rows(); ++i) {
    bool dup = false;
    for (int k : keep) {
      if ((x.row(i) - x.row(k)).cwiseAbs().maxCoeff() == 0.0) {
        dup = true;
        break;
      }
    }
    if (!dup) keep.push_back(i);
  }
  Eigen::MatrixXd out(static_cast<int>(keep.size()), x.cols());
  for (size_t r = 0; r < keep.size(); ++r) out.row(static_cast<int>(r)) = x.row(keep[r]);
  return out;
}

}  // namespace

Eigen::MatrixXd select_inducing_points(const GpDataset& data, int m,
                                       double bias, std::uint64_t seed) {
  const int n = data.n();
  const int d = data.dim();
  if (m < 1 || m > n) {
    throw std::invalid_argument("select_inducing_points: need 1 <= m <= n");
  }
  if (bias < 0.0) {
    throw std::invalid_argument("select_inducing_points: bias must be >= 0");
  }
  const Eigen::MatrixXd distinct = distinct_rows(data.X);
  if (m > distinct.rows()) {
    throw std::invalid_argument(
        "select_inducing_points: m exceeds the number of distinct inputs");
  }
  if (m == distinct.rows()) return distinct;

  Eigen::VectorXd weights(n);
  for (int i = 0; i < n; ++i) {
    weights[i] = bias > 0.0 ? std::exp(-data.X.row(i).norm() / bias) : 1.0;
  }

  std::mt19937_64 rng(seed);
  Eigen::MatrixXd centers(m, d);

  // Weighted k-means++ seeding.
  {
    std::discrete_distribution<int> first(weights.data(),
                                          weights.data() + n);
    centers.row(0) = data.X.row(first(rng));
    Eigen::VectorXd min_d2 =
        (data.X.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < m; ++c) {
      Eigen::VectorXd probs = weights.cwiseProduct(min_d2);
      const double total = probs.sum();
      int pick;
      if (total <= 0.0) {
        // All mass collapsed; take the farthest remaining point.
        min_d2.maxCoeff(&pick);
      } else {
        std::discrete_distribution<int> dist(probs.data(), probs.data() + n);
        pick = dist(rng);
      }
      centers.row(c) = data.X.row(pick);
      min_d2 = min_d2.cwiseMin(
          (data.X.rowwise() - centers.row(c)).rowwise().squaredNorm());
    }
  }

  // Weighted Lloyd iterations.
  std::vector<int> assign(n, -1);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < m; ++c) {
        const double dist = (data.X.row(i) - centers.row(c)).squaredNorm();
        if (dist < best_d) {
          best_d = dist;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(m, d);
    Eigen::VectorXd mass = Eigen::VectorXd::Zero(m);
    for (int i = 0; i < n; ++i) {
      sums.row(assign[i]) += weights[i] * data.X.row(i);
      mass[assign[i]] += weights[i];
    }
    for (int c = 0; c < m; ++c) {
      if (mass[c] > 0.0) {
        centers.row(c) = sums.row(c) / mass[c];
      } else {
        // Re-seed an empty cluster at the point farthest from its center.
        int far = 0;
        double far_d = -1.0;
        for (int i = 0; i < n; ++i) {
          const double dist =
              (data.X.row(i) - centers.row(assign[i])).squaredNorm();
          if (dist > far_d) {
            far_d = dist;
            far = i;
          }
        }
        centers.row(c) = data.X.row(far);
        assign[far] = c;
      }
    }
  }

  // Exact center collisions would make K_mm singular downstream; nudge them
  // apart deterministically.
  for (int a = 0; a < m; ++a) {
    for (int b = a + 1; b < m; ++b) {
      if ((centers.row(a) - centers.row(b)).cwiseAbs().maxCoeff() == 0.0) {
        const double span = (data.X.colwise().maxCoeff() -
                             data.X.colwise().minCoeff()).norm();
        centers.row(b).array() += 1e-6 * std::max(span, 1.0) * (b + 1);
      }
    }
  }
  return centers;
}

SgpTrainResult train_sgp(const GpDataset& data, int m, double bias,
                         const KernelHyperparams& hyp_init,
                         const SgpTrainOptions& opts) {
  const int n = data.n();
  const int d = data.dim();
  if (m < 1 || m > n) throw std::invalid_argument("train_sgp: need 1 <= m <= n");
  hyp_init.validate();

  const Eigen::MatrixXd x_m0 = select_inducing_points(data, m, bias, opts.seed);
  const int m_eff = static_cast<int>(x_m0.rows());

  // Parameter vector: [log sigma_f, log l, log sigma_n, vec(x_m)].
  const int np = 3 + m_eff * d;
  Eigen::VectorXd theta0(np);
  theta0.head<3>() = hyp_init.to_log();
  for (int j = 0; j < m_eff; ++j) theta0.segment(3 + j * d, d) = x_m0.row(j);

  const auto unpack = [m_eff, d](const Eigen::VectorXd& theta,
                                 KernelHyperparams* hyp, Eigen::MatrixXd* xm) {
    *hyp = KernelHyperparams::from_log(Eigen::Vector3d(theta.head<3>()));
    xm->resize(m_eff, d);
    for (int j = 0; j < m_eff; ++j) xm->row(j) = theta.segment(3 + j * d, d);
  };

  const auto objective = [&](const Eigen::VectorXd& theta,
                             Eigen::VectorXd* grad) -> double {
    KernelHyperparams hyp;
    Eigen::MatrixXd xm;
    unpack(theta, &hyp, &xm);
    try {
      if (grad == nullptr) return -sgp_elbo(data, hyp, xm);
      const ElboGradient g = sgp_elbo_with_gradient(data, hyp, xm);
      grad->resize(theta.size());
      grad->head<3>() = -g.log_hyp;
      for (int j = 0; j < m_eff; ++j) {
        grad->segment(3 + j * d, d) = -g.x_m.row(j);
      }
      return -g.value;
    } catch (const SolverError&) {
      if (grad != nullptr) grad->setZero(theta.size());
      return std::numeric_limits<double>::infinity();
    } catch (const std::invalid_argument&) {
      // Line-search probe left the valid hyperparameter domain.
      if (grad != nullptr) grad->setZero(theta.size());
      return std::numeric_limits<double>::infinity();
    }
  };

  BfgsOptions bopts;
  bopts.max_iters = opts.max_iters;
  bopts.grad_tol = opts.grad_tol;
  const BfgsResult res = bfgs_minimize(objective, theta0, bopts);

  // Guard against a diverging ascent (cannot happen with a monotone line
  // search, but the trace is checked regardless).
  int rising = 0;
  for (size_t i = 1; i < res.objective_trace.size(); ++i) {
    rising = res.objective_trace[i] > res.objective_trace[i - 1] ? rising + 1 : 0;
    if (rising >= 10) {
      throw SolverError("train_sgp: ELBO decreased over 10 accepted steps");
    }
  }

  KernelHyperparams hyp;
  Eigen::MatrixXd x_m_opt;
  unpack(res.x, &hyp, &x_m_opt);

  // Keep the inducing inputs inside the data hull padded by 2 l.
  const Eigen::RowVectorXd lo =
      data.X.colwise().minCoeff().array() - 2.0 * hyp.length_scale;
  const Eigen::RowVectorXd hi =
      data.X.colwise().maxCoeff().array() + 2.0 * hyp.length_scale;
  for (int j = 0; j < m_eff; ++j) {
    x_m_opt.row(j) = x_m_opt.row(j).cwiseMax(lo).cwiseMin(hi);
  }

  auto [mu, a_cov] = compute_variational_params(data, hyp, x_m_opt);

  SgpTrainResult out;
  out.model = SgpModel(hyp, x_m_opt, mu, a_cov, data.y_mean, 0.0);
  out.iters = res.iters;
  out.elbo_trace.reserve(res.objective_trace.size());
  for (double v : res.objective_trace) out.elbo_trace.push_back(-v);

  out.report.elbo = sgp_elbo(data, hyp, x_m_opt);
  if (n <= opts.exact_lml_max_n) {
    const ExactGpModel exact = ExactGpModel::fit(data, hyp);
    out.report.exact_lml = exact.log_marginal_likelihood();
    out.report.gap = *out.report.exact_lml - out.report.elbo;
  }
  return out;
}

Eigen::Vector3d SgpModelSet::mean(const Eigen::Vector3d& v_bar) const {
  Eigen::Vector3d g;
  for (int i = 0; i < 3; ++i) g[i] = axes[i].predict(v_bar[i]).mean;
  return g;
}

void SgpModelSet::mean_and_diag_jacobian(const Eigen::Vector3d& v_bar,
                                         Eigen::Vector3d* mean,
                                         Eigen::Vector3d* diag_jac) const {
  Eigen::VectorXd x(1), grad(1);
  for (int i = 0; i < 3; ++i) {
    x[0] = v_bar[i];
    double mu = 0.0;
    axes[i].predict_mean_grad(x, &mu, &grad);
    if (mean != nullptr) (*mean)[i] = mu;
    if (diag_jac != nullptr) (*diag_jac)[i] = grad[0];
  }
}

bool SgpModelSet::trained() const {
  return axes[0].trained() && axes[1].trained() && axes[2].trained();
}

}  // namespace resnmpc
