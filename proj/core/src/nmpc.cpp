#include "resnmpc/nmpc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "resnmpc/errors.hpp"
#include "resnmpc/qp.hpp"
#include "resnmpc/residual_dynamics.hpp"

namespace resnmpc {

namespace {

constexpr double kDistanceSmoothing = 1e-9;
constexpr double kSlackCurvature = 1e-8;
constexpr double kG1Tol = 1e-6;
constexpr double kG2Tol = 1e-4;

double smoothed_distance(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return std::sqrt((a - b).squaredNorm() + kDistanceSmoothing);
}

int horizon_from_w(const Eigen::VectorXd& w) {
  const int n = static_cast<int>(w.size());
  if (n < 12 || (n - 4) % 8 != 0) {
    throw std::invalid_argument("nmpc: decision vector has invalid size");
  }
  return (n - 4) / 8;
}

// Linearized obstacle constraint row, referencing one horizon state.
struct ObstacleRow {
  int state_index = 0;
  int g2_index = 0;
  double value = 0.0;          // d_o - dist at the linearization point
  Eigen::Vector3d grad_p = Eigen::Vector3d::Zero();
};

struct MeritTerms {
  double cost = 0.0;
  double g1_l1 = 0.0;
  double g1_inf = 0.0;
  double g2_violation_sum = 0.0;
  double g2_max = 0.0;
};

}  // namespace

void NmpcConfig::validate() const {
  if (N < 1) throw std::invalid_argument("NmpcConfig: N must be >= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("NmpcConfig: dt must be > 0");
  if ((Q.array() < 0.0).any()) {
    throw std::invalid_argument("NmpcConfig: Q entries must be >= 0");
  }
  if ((R.array() <= 0.0).any()) {
    throw std::invalid_argument("NmpcConfig: R entries must be > 0");
  }
  if (!(v_max >= 0.0)) throw std::invalid_argument("NmpcConfig: v_max must be >= 0");
  if (!(omega_max >= 0.0)) {
    throw std::invalid_argument("NmpcConfig: omega_max must be >= 0");
  }
  if (!(d_o > 0.0)) throw std::invalid_argument("NmpcConfig: d_o must be > 0");
  if (max_sqp_iters < 1) {
    throw std::invalid_argument("NmpcConfig: max_sqp_iters must be >= 1");
  }
  if (!(kkt_tol > 0.0)) throw std::invalid_argument("NmpcConfig: kkt_tol must be > 0");
}

int nmpc_num_vars(int horizon) { return 8 * horizon + 4; }

Eigen::Ref<const Eigen::Vector4d> nmpc_control(const Eigen::VectorXd& w, int i) {
  return w.segment<4>(4 * i);
}

Eigen::Ref<const Eigen::Vector4d> nmpc_state(const Eigen::VectorXd& w,
                                             int horizon, int i) {
  return w.segment<4>(4 * horizon + 4 * i);
}

State NmpcSolution::state(int i) const {
  return State::from_vector(nmpc_state(w, horizon, i));
}

ControlInput NmpcSolution::control(int i) const {
  return ControlInput::from_vector(nmpc_control(w, i));
}

std::pair<double, Eigen::VectorXd> nmpc_cost(const ReferenceSlice& ref,
                                             const Eigen::VectorXd& w,
                                             const Eigen::Vector4d& q_diag,
                                             const Eigen::Vector4d& r_diag) {
  const int horizon = horizon_from_w(w);
  if (static_cast<int>(ref.states.size()) != horizon + 1 ||
      static_cast<int>(ref.controls.size()) != horizon) {
    throw std::invalid_argument("nmpc_cost: reference slice size mismatch");
  }
  double cost = 0.0;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(w.size());
  for (int i = 0; i < horizon; ++i) {
    Eigen::Vector4d e = nmpc_control(w, i) - ref.controls[i].to_vector();
    cost += e.dot(r_diag.asDiagonal() * e);
    grad.segment<4>(4 * i) = 2.0 * r_diag.cwiseProduct(e);
  }
  for (int i = 0; i <= horizon; ++i) {
    Eigen::Vector4d e = nmpc_state(w, horizon, i) - ref.states[i].to_vector();
    e[3] = wrap_angle(e[3]);
    cost += e.dot(q_diag.asDiagonal() * e);
    grad.segment<4>(4 * horizon + 4 * i) = 2.0 * q_diag.cwiseProduct(e);
  }
  return {cost, std::move(grad)};
}

DefectEval shooting_defects(const Eigen::VectorXd& w, const State& x_current,
                            const DynamicsModel& dynamics, double dt,
                            bool with_jacobians) {
  const int horizon = horizon_from_w(w);
  DefectEval out;
  out.g1.resize(4 * (horizon + 1));

  Eigen::Vector4d c0 = x_current.to_vector() - nmpc_state(w, horizon, 0);
  c0[3] = wrap_angle(c0[3]);
  out.g1.head<4>() = c0;

  if (with_jacobians) {
    out.jac_x.resize(horizon);
    out.jac_u.resize(horizon);
  }
  for (int i = 1; i <= horizon; ++i) {
    const State xi = State::from_vector(nmpc_state(w, horizon, i - 1));
    const ControlInput ui = ControlInput::from_vector(nmpc_control(w, i - 1));
    Eigen::Vector4d pred;
    if (with_jacobians) {
      const auto step = rk4_step_with_jacobians(dynamics, xi, ui, dt);
      pred = step.x_next.to_vector();
      out.jac_x[i - 1] = step.jac_x;
      out.jac_u[i - 1] = step.jac_u;
    } else {
      pred = rk4_step(dynamics, xi, ui, dt).to_vector();
    }
    Eigen::Vector4d ci = pred - nmpc_state(w, horizon, i);
    ci[3] = wrap_angle(ci[3]);
    out.g1.segment<4>(4 * i) = ci;
  }
  return out;
}

Eigen::MatrixXd DefectEval::dense_jacobian(int horizon) const {
  const int nw = nmpc_num_vars(horizon);
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(4 * (horizon + 1), nw);
  jac.block(0, 4 * horizon, 4, 4) = -Eigen::Matrix4d::Identity();
  for (int i = 1; i <= horizon; ++i) {
    jac.block(4 * i, 4 * (i - 1), 4, 4) = jac_u[i - 1];
    jac.block(4 * i, 4 * horizon + 4 * (i - 1), 4, 4) = jac_x[i - 1];
    jac.block(4 * i, 4 * horizon + 4 * i, 4, 4) = -Eigen::Matrix4d::Identity();
  }
  return jac;
}

Eigen::VectorXd obstacle_constraints(const Eigen::VectorXd& w,
                                     const std::vector<Obstacle>& obstacles,
                                     double d_o) {
  const int horizon = horizon_from_w(w);
  Eigen::VectorXd g2(static_cast<int>(obstacles.size()) * (horizon + 1));
  int idx = 0;
  for (const Obstacle& obs : obstacles) {
    for (int i = 0; i <= horizon; ++i) {
      const Eigen::Vector3d p = nmpc_state(w, horizon, i).head<3>();
      g2[idx++] = d_o - smoothed_distance(obs.center, p);
    }
  }
  return g2;
}

NmpcSolver::NmpcSolver(NmpcConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
}

NmpcSolution NmpcSolver::shift_warm_start(const NmpcSolution& sol) {
  NmpcSolution shifted = sol;
  const int n = sol.horizon;
  for (int i = 0; i + 1 < n; ++i) {
    shifted.w.segment<4>(4 * i) = sol.w.segment<4>(4 * (i + 1));
  }
  for (int i = 0; i < n; ++i) {
    shifted.w.segment<4>(4 * n + 4 * i) = sol.w.segment<4>(4 * n + 4 * (i + 1));
  }
  // Last control repeated; last state kept.
  return shifted;
}

namespace {

MeritTerms evaluate_merit(const Eigen::VectorXd& w, const ReferenceSlice& ref,
                          const State& x_current, const DynamicsModel& dyn,
                          const std::vector<Obstacle>& obstacles,
                          const NmpcConfig& cfg) {
  MeritTerms t;
  t.cost = nmpc_cost(ref, w, cfg.Q, cfg.R).first;
  const DefectEval defects =
      shooting_defects(w, x_current, dyn, cfg.dt, /*with_jacobians=*/false);
  t.g1_l1 = defects.g1.lpNorm<1>();
  t.g1_inf = defects.g1.lpNorm<Eigen::Infinity>();
  if (!obstacles.empty()) {
    const Eigen::VectorXd g2 = obstacle_constraints(w, obstacles, cfg.d_o);
    t.g2_violation_sum = g2.cwiseMax(0.0).sum();
    t.g2_max = g2.maxCoeff();
  } else {
    t.g2_max = -std::numeric_limits<double>::infinity();
  }
  return t;
}

double merit_value(const MeritTerms& t, double nu, double rho) {
  return t.cost + nu * t.g1_l1 + rho * t.g2_violation_sum;
}

}  // namespace

NmpcSolution NmpcSolver::solve(const State& x_current,
                               const ReferenceSlice& ref,
                               const std::vector<Obstacle>& obstacles,
                               const SgpModelSet* residual_model,
                               const NmpcSolution* warm_start) {
  const auto t_start = std::chrono::steady_clock::now();
  const int n = cfg_.N;
  const int nw = nmpc_num_vars(n);
  if (static_cast<int>(ref.states.size()) != n + 1 ||
      static_cast<int>(ref.controls.size()) != n) {
    throw std::invalid_argument("NmpcSolver: reference slice must cover N+1 states");
  }
  iterations_.clear();

  NominalDynamics nominal;
  std::optional<AugmentedDynamics> augmented;
  if (residual_model != nullptr) augmented.emplace(residual_model);
  const DynamicsModel& dyn =
      augmented ? static_cast<const DynamicsModel&>(*augmented) : nominal;

  // Per-component bounds of the decision vector.
  Eigen::Vector4d u_lo(-cfg_.v_max, -cfg_.v_max, -cfg_.v_max, -cfg_.omega_max);
  Eigen::Vector4d u_hi = -u_lo;
  const bool yaw_free = !std::isfinite(cfg_.x_min[3]) && !std::isfinite(cfg_.x_max[3]);

  // Initial iterate: warm start as-is, otherwise the reference with the
  // first state pinned to x_current; controls clipped into the box.
  Eigen::VectorXd w(nw);
  if (warm_start != nullptr && warm_start->w.size() == nw) {
    w = warm_start->w;
  } else {
    for (int i = 0; i < n; ++i) w.segment<4>(4 * i) = ref.controls[i].to_vector();
    w.segment<4>(4 * n) = x_current.to_vector();
    for (int i = 1; i <= n; ++i) {
      w.segment<4>(4 * n + 4 * i) = ref.states[i].to_vector();
    }
  }
  // Collision-free initialization: iterate states well inside a safe zone
  // stall the linearized subproblem (near- and far-side rows cancel), so
  // push them laterally out before the first iteration. Boundary-riding
  // states are left alone to keep warm starts intact; the first state stays
  // pinned to x_current by the defect constraint regardless.
  constexpr double kPenetrationTol = 0.05;
  for (int pass = 0; pass < 3; ++pass) {
    for (int i = 1; i <= n; ++i) {
      Eigen::Vector3d p = w.segment<3>(4 * n + 4 * i);
      const Eigen::Vector3d tangent =
          (ref.states[std::min(i + 1, n)].p - ref.states[std::max(i - 1, 0)].p)
              .normalized();
      for (const Obstacle& obs : obstacles) {
        const Eigen::Vector3d to_state = p - obs.center;
        if (to_state.norm() >= cfg_.d_o - kPenetrationTol) continue;
        Eigen::Vector3d lateral = to_state - to_state.dot(tangent) * tangent;
        if (lateral.norm() < 1e-9) {
          lateral = tangent.cross(Eigen::Vector3d::UnitZ());
          if (lateral.norm() < 1e-9) lateral = Eigen::Vector3d::UnitX();
        }
        p = obs.center + lateral.normalized() * (cfg_.d_o + 0.05);
      }
      w.segment<3>(4 * n + 4 * i) = p;
    }
  }
  for (int i = 0; i < n; ++i) {
    w.segment<4>(4 * i) =
        w.segment<4>(4 * i).cwiseMax(u_lo).cwiseMin(u_hi);
  }
  for (int i = 0; i <= n; ++i) {
    w.segment<4>(4 * n + 4 * i) =
        w.segment<4>(4 * n + 4 * i).cwiseMax(cfg_.x_min).cwiseMin(cfg_.x_max);
  }

  NmpcSolution sol;
  sol.horizon = n;
  sol.status = SolveStatus::kMaxIterations;

  double nu = 0.0;
  const double rho = cfg_.obstacle_penalty;

  for (int iter = 0; iter < cfg_.max_sqp_iters; ++iter) {
    // ---- Linearize at w.
    const DefectEval defects = shooting_defects(w, x_current, dyn, cfg_.dt);
    const auto [cost, cost_grad] = nmpc_cost(ref, w, cfg_.Q, cfg_.R);

    // Condensing: dx_i = F_i du + fvec_i along the defect staircase.
    Eigen::MatrixXd f_mat = Eigen::MatrixXd::Zero(4 * (n + 1), 4 * n);
    Eigen::VectorXd f_vec(4 * (n + 1));
    f_vec.head<4>() = defects.g1.head<4>();
    for (int i = 1; i <= n; ++i) {
      f_mat.middleRows<4>(4 * i) =
          defects.jac_x[i - 1] * f_mat.middleRows<4>(4 * (i - 1));
      f_mat.block<4, 4>(4 * i, 4 * (i - 1)) += defects.jac_u[i - 1];
      f_vec.segment<4>(4 * i) = defects.jac_x[i - 1] * f_vec.segment<4>(4 * (i - 1)) +
                                defects.g1.segment<4>(4 * i);
    }

    // Exact cost restated over du: stage errors at du = 0.
    Eigen::VectorXd eps(4 * (n + 1));
    for (int i = 0; i <= n; ++i) {
      Eigen::Vector4d e = nmpc_state(w, n, i) + f_vec.segment<4>(4 * i) -
                          ref.states[i].to_vector();
      e[3] = wrap_angle(e[3]);
      eps.segment<4>(4 * i) = e;
    }
    Eigen::VectorXd e_u(4 * n);
    for (int i = 0; i < n; ++i) {
      e_u.segment<4>(4 * i) = nmpc_control(w, i) - ref.controls[i].to_vector();
    }

    Eigen::VectorXd q_rep(4 * (n + 1)), r_rep(4 * n);
    for (int i = 0; i <= n; ++i) q_rep.segment<4>(4 * i) = cfg_.Q;
    for (int i = 0; i < n; ++i) r_rep.segment<4>(4 * i) = cfg_.R;

    const Eigen::MatrixXd qf = q_rep.asDiagonal() * f_mat;
    Eigen::MatrixXd h_r = 2.0 * (f_mat.transpose() * qf);
    h_r.diagonal() += 2.0 * r_rep;
    Eigen::VectorXd g_r =
        2.0 * (r_rep.cwiseProduct(e_u) + f_mat.transpose() * (q_rep.cwiseProduct(eps)));

    // ---- Obstacle rows near the horizon (linearized, slacked). Only the
    // nearest few obstacles per shooting state enter the subproblem; the
    // full g2 still gates convergence, so pruning cannot hide a violation.
    std::vector<ObstacleRow> rows;
    Eigen::VectorXd g2_full;
    if (!obstacles.empty()) {
      constexpr int kMaxRowsPerState = 8;
      g2_full = obstacle_constraints(w, obstacles, cfg_.d_o);
      const int n_obs = static_cast<int>(obstacles.size());
      for (int i = 0; i <= n; ++i) {
        std::vector<int> near;
        for (int o = 0; o < n_obs; ++o) {
          if (g2_full[o * (n + 1) + i] > -cfg_.obstacle_row_margin) {
            near.push_back(o);
          }
        }
        if (static_cast<int>(near.size()) > kMaxRowsPerState) {
          std::partial_sort(near.begin(), near.begin() + kMaxRowsPerState,
                            near.end(), [&](int a, int b) {
                              return g2_full[a * (n + 1) + i] >
                                     g2_full[b * (n + 1) + i];
                            });
          near.resize(kMaxRowsPerState);
        }
        const Eigen::Vector3d p = nmpc_state(w, n, i).head<3>();
        for (int o : near) {
          ObstacleRow row;
          row.state_index = i;
          row.g2_index = o * (n + 1) + i;
          row.value = g2_full[row.g2_index];
          row.grad_p =
              -(p - obstacles[o].center) / smoothed_distance(obstacles[o].center, p);
          rows.push_back(row);
        }
      }
    }
    const int n_slack = static_cast<int>(rows.size());

    // ---- Assemble the condensed QP over z = [du; s].
    const int nu_vars = 4 * n;
    const int nz = nu_vars + n_slack;
    QpProblem qp;
    qp.H = Eigen::MatrixXd::Zero(nz, nz);
    qp.H.topLeftCorner(nu_vars, nu_vars) = h_r;
    for (int s = 0; s < n_slack; ++s) qp.H(nu_vars + s, nu_vars + s) = kSlackCurvature;
    qp.c.resize(nz);
    qp.c.head(nu_vars) = g_r;
    qp.c.tail(n_slack).setConstant(rho);

    qp.lb.resize(nz);
    qp.ub.resize(nz);
    for (int i = 0; i < n; ++i) {
      qp.lb.segment<4>(4 * i) = u_lo - nmpc_control(w, i);
      qp.ub.segment<4>(4 * i) = u_hi - nmpc_control(w, i);
    }
    qp.lb.tail(n_slack).setZero();
    qp.ub.tail(n_slack).setConstant(std::numeric_limits<double>::infinity());

    // General rows: slacked obstacle constraints plus finite state bounds.
    std::vector<Eigen::VectorXd> a_rows;
    std::vector<double> b_rows;
    for (int r = 0; r < n_slack; ++r) {
      const ObstacleRow& row = rows[r];
      Eigen::VectorXd a = Eigen::VectorXd::Zero(nz);
      a.head(nu_vars) =
          (row.grad_p.transpose() * f_mat.middleRows<3>(4 * row.state_index))
              .transpose();
      a[nu_vars + r] = -1.0;
      const double rhs = -row.value - row.grad_p.dot(f_vec.segment<3>(4 * row.state_index));
      a_rows.push_back(std::move(a));
      b_rows.push_back(rhs);
    }
    for (int i = 0; i <= n; ++i) {
      for (int k = 0; k < 4; ++k) {
        const double base = w[4 * n + 4 * i + k] + f_vec[4 * i + k];
        if (std::isfinite(cfg_.x_max[k])) {
          Eigen::VectorXd a = Eigen::VectorXd::Zero(nz);
          a.head(nu_vars) = f_mat.row(4 * i + k);
          a_rows.push_back(std::move(a));
          b_rows.push_back(cfg_.x_max[k] - base);
        }
        if (std::isfinite(cfg_.x_min[k])) {
          Eigen::VectorXd a = Eigen::VectorXd::Zero(nz);
          a.head(nu_vars) = -f_mat.row(4 * i + k);
          a_rows.push_back(std::move(a));
          b_rows.push_back(base - cfg_.x_min[k]);
        }
      }
    }
    qp.A.resize(static_cast<int>(a_rows.size()), nz);
    qp.b.resize(static_cast<int>(a_rows.size()));
    for (size_t r = 0; r < a_rows.size(); ++r) {
      qp.A.row(static_cast<int>(r)) = a_rows[r];
      qp.b[static_cast<int>(r)] = b_rows[r];
    }

    Eigen::VectorXd z0 = Eigen::VectorXd::Zero(nz);
    for (int r = 0; r < n_slack; ++r) {
      z0[nu_vars + r] = std::max(0.0, -b_rows[r]);
    }

    const QpSolution qp_sol = solve_qp(qp, z0);
    if (qp_sol.status == QpStatus::kInfeasibleStart) {
      sol.status = SolveStatus::kInfeasibleQp;
      break;
    }

    const Eigen::VectorXd du = qp_sol.x.head(nu_vars);
    const double step_norm = du.lpNorm<Eigen::Infinity>();

    // ---- Convergence check at the current iterate.
    const MeritTerms now = evaluate_merit(w, ref, x_current, dyn, obstacles, cfg_);
    const double stationarity = step_norm / (1.0 + w.head(nu_vars).lpNorm<Eigen::Infinity>());
    const double kkt = std::max({now.g1_inf, std::max(0.0, now.g2_max), stationarity});
    if (now.g1_inf <= kG1Tol && now.g2_max <= kG2Tol && stationarity <= cfg_.kkt_tol) {
      sol.status = SolveStatus::kConverged;
      sol.kkt_residual = kkt;
      sol.sqp_iters = iter + 1;
      break;
    }

    // ---- Penalty parameter from the tracking-cost adjoints (first pass).
    if (iter == 0) {
      Eigen::Vector4d lam = Eigen::Vector4d::Zero();
      double lam_max = 0.0;
      for (int i = n; i >= 0; --i) {
        Eigen::Vector4d q_i = 2.0 * cfg_.Q.cwiseProduct(eps.segment<4>(4 * i));
        lam = (i < n) ? Eigen::Vector4d(q_i + defects.jac_x[i].transpose() * lam)
                      : q_i;
        lam_max = std::max(lam_max, lam.lpNorm<Eigen::Infinity>());
      }
      nu = std::max(10.0, 2.0 * lam_max);
    }

    // ---- Merit line search along (du, dx).
    const auto qp_objective = [&](const Eigen::VectorXd& z) {
      return 0.5 * z.dot(qp.H * z) + qp.c.dot(z);
    };
    const double pred =
        nu * now.g1_l1 + std::max(0.0, qp_objective(z0) - qp_objective(qp_sol.x));

    const double merit_now = merit_value(now, nu, rho);
    Eigen::VectorXd dx(4 * (n + 1));
    dx = f_mat * du + f_vec;

    double alpha = 1.0;
    bool accepted = false;
    Eigen::VectorXd w_new;
    MeritTerms trial_terms;
    for (int ls = 0; ls < 13; ++ls) {
      w_new = w;
      w_new.head(nu_vars) += alpha * du;
      w_new.tail(4 * (n + 1)) += alpha * dx;
      if (yaw_free) {
        for (int i = 0; i <= n; ++i) {
          w_new[4 * n + 4 * i + 3] = wrap_angle(w_new[4 * n + 4 * i + 3]);
        }
      }
      trial_terms = evaluate_merit(w_new, ref, x_current, dyn, obstacles, cfg_);
      const double merit_trial = merit_value(trial_terms, nu, rho);
      if (merit_trial <= merit_now - 1e-4 * alpha * pred + 1e-12) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }

    const double applied_step =
        std::max(alpha * step_norm,
                 alpha * dx.lpNorm<Eigen::Infinity>());
    if (!accepted || applied_step <= 1e-12 * (1.0 + w.lpNorm<Eigen::Infinity>())) {
      // No descent left at this penalty level; either we are done or stuck.
      sol.kkt_residual = kkt;
      sol.sqp_iters = iter + 1;
      sol.status = (now.g1_inf <= kG1Tol && now.g2_max <= kG2Tol)
                       ? SolveStatus::kConverged
                       : SolveStatus::kMaxIterations;
      break;
    }

    w = w_new;
    sol.sqp_iters = iter + 1;
    sol.kkt_residual = kkt;

    IterationRecord rec;
    rec.iter = iter;
    rec.cost = trial_terms.cost;
    rec.merit = merit_value(trial_terms, nu, rho);
    rec.kkt_residual = kkt;
    rec.step_norm = step_norm;
    rec.alpha = alpha;
    rec.nu = nu;
    iterations_.push_back(rec);
    if (debug_stream_ != nullptr) {
      (*debug_stream_) << "{\"iteration\":" << iter << ",\"cost\":" << rec.cost
                       << ",\"kkt_residual\":" << rec.kkt_residual
                       << ",\"step_length\":" << rec.alpha << "}\n";
    }
  }

  // ---- Final diagnostics.
  sol.w = w;
  const MeritTerms final_terms =
      evaluate_merit(w, ref, x_current, dyn, obstacles, cfg_);
  sol.cost = final_terms.cost;
  sol.g1_inf_norm = final_terms.g1_inf;
  if (!obstacles.empty()) {
    sol.g2_values = obstacle_constraints(w, obstacles, cfg_.d_o);
    sol.obstacle_slacks = sol.g2_values.cwiseMax(0.0);
  } else {
    sol.g2_values.resize(0);
    sol.obstacle_slacks.resize(0);
  }
  if (sol.status == SolveStatus::kConverged &&
      (final_terms.g1_inf > kG1Tol || final_terms.g2_max > kG2Tol)) {
    sol.status = SolveStatus::kMaxIterations;
  }
  sol.solve_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return sol;
}

}  // namespace resnmpc
