// Copyright 2026 The fracdose authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fracdose/dosing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "fracdose/errors.hpp"

namespace fracdose::dosing {

namespace {

// --- deterministic RNG (stable across standard libraries) -------------------

struct SplitMix64 {
  std::uint64_t state;
  explicit SplitMix64(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform() {  // (0, 1)
    return (static_cast<double>(next() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }
  double normal() {  // polar method
    for (;;) {
      const double u = 2.0 * uniform() - 1.0;
      const double v = 2.0 * uniform() - 1.0;
      const double s = u * u + v * v;
      if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }
};

// --- GL stepping on the two-compartment augmented system --------------------

struct Stepper {
  const gl::AugmentedLtiSystem* sys;
  std::vector<double> q1, q2;  // oldest first; back() is the current state

  explicit Stepper(const gl::AugmentedLtiSystem& s) : sys(&s) {}

  void reset(const Eigen::Vector2d& x0) {
    q1.assign(1, x0[0]);
    q2.assign(1, x0[1]);
  }

  // newest-first windows (as stored in a stacked estimate)
  void reset_history(std::span<const double> w1, std::span<const double> w2) {
    q1.assign(w1.rbegin(), w1.rend());
    q2.assign(w2.rbegin(), w2.rend());
  }

  Eigen::Vector2d step(double u, double d1 = 0.0, double d2 = 0.0) {
    const std::size_t len = q1.size();
    const std::size_t m = std::min(len, sys->nu);
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      s1 += sys->conv[j] * q1[len - 1 - j];
      s2 += sys->conv[j] * q2[len - 1 - j];
    }
    const Eigen::Vector2d xk(q1.back(), q2.back());
    Eigen::Vector2d next = xk + sys->t_c * (sys->a * xk) +
                           sys->f * Eigen::Vector2d(s1, s2) +
                           sys->t_c * sys->b * u;
    next[0] += d1;
    next[1] += d2;
    q1.push_back(next[0]);
    q2.push_back(next[1]);
    return next;
  }
};

int steps_per_dose(const OcpSpec& spec) {
  const double ratio = spec.t_d / spec.t_c;
  const int r = static_cast<int>(std::lround(ratio));
  if (r < 1 || std::abs(ratio - r) > 1e-9)
    throw std::invalid_argument("OcpSpec: t_d must be an integer multiple of t_c");
  return r;
}

// Shared condensation state: one unit-impulse response serves every dose
// column (the augmented system is time-invariant).
struct Condenser {
  OcpSpec spec;
  gl::AugmentedLtiSystem sys;
  std::vector<double> imp1, imp2;  // unit dose at step 0, length N+1
  int n_total_steps = 0;
  int n_total_doses = 0;
  int spd = 0;

  Condenser(const OcpSpec& s, const pk::TwoCompParams& model)
      : spec(s),
        sys(gl::discretize_two_comp(model, s.t_c,
                                    s.nu > 0 ? s.nu : default_nu(s))) {
    spd = steps_per_dose(spec);
    n_total_steps = horizon_steps(spec);
    n_total_doses = n_doses(spec);
    Stepper st(sys);
    st.reset(Eigen::Vector2d::Zero());
    imp1.resize(n_total_steps + 1);
    imp2.resize(n_total_steps + 1);
    imp1[0] = imp2[0] = 0.0;
    for (int k = 0; k < n_total_steps; ++k) {
      const Eigen::Vector2d x = st.step(k == 0 ? 1.0 : 0.0);
      imp1[k + 1] = x[0];
      imp2[k + 1] = x[1];
    }
  }

  double ref1_at(int k) const {
    if (!spec.ref_q1_traj.empty()) return spec.ref_q1_traj[k];
    return spec.ref_q1;
  }
  double ref2_at(int k) const {
    if (!spec.ref_q2_traj.empty()) return spec.ref_q2_traj[k];
    return spec.ref_q2;
  }

  // Condensed QP for the tail starting at dose index `start_dose`, predicted
  // from the given newest-first history window and disturbance estimate.
  CondensedQp build(std::span<const double> hist1, std::span<const double> hist2,
                    const Eigen::Vector2d& d_est, int start_dose) const {
    const int k0 = start_dose * spd;
    const int n_rem = n_total_steps - k0;
    const int m = n_total_doses - start_dose;
    if (m < 1) throw std::invalid_argument("build_qp: empty dosing horizon");

    CondensedQp qp;
    qp.u_max = spec.u_max;
    qp.t_c = spec.t_c;
    qp.free_q1.resize(n_rem + 1);
    qp.free_q2.resize(n_rem + 1);
    Stepper st(sys);
    st.reset_history(hist1, hist2);
    qp.free_q1(0) = hist1[0];
    qp.free_q2(0) = hist2[0];
    for (int k = 0; k < n_rem; ++k) {
      const Eigen::Vector2d x = st.step(0.0, d_est[0], d_est[1]);
      qp.free_q1(k + 1) = x[0];
      qp.free_q2(k + 1) = x[1];
    }
    if (qp.free_q1(0) < -1e-9 || qp.free_q1(0) > spec.x_max + 1e-9 ||
        qp.free_q2(0) < -1e-9 || qp.free_q2(0) > spec.x_max + 1e-9)
      throw InfeasibleError("build_qp: initial state violates the bounds");

    qp.resp_q1 = Eigen::MatrixXd::Zero(n_rem + 1, m);
    qp.resp_q2 = Eigen::MatrixXd::Zero(n_rem + 1, m);
    for (int j = 0; j < m; ++j) {
      const int kd = j * spd;  // dose instant relative to the tail start
      for (int k = kd; k <= n_rem; ++k) {
        qp.resp_q1(k, j) = imp1[k - kd];
        qp.resp_q2(k, j) = imp2[k - kd];
      }
    }

    const double w1 = spec.q_weights[0];
    const double w2 = spec.q_weights[1];
    qp.hess = Eigen::MatrixXd::Zero(m, m);
    qp.grad = Eigen::VectorXd::Zero(m);
    qp.constant = 0.0;
    for (int k = 0; k <= n_rem; ++k) {
      const double e1 = ref1_at(k0 + k) - qp.free_q1(k);
      const double e2 = ref2_at(k0 + k) - qp.free_q2(k);
      if (w1 != 0.0) {
        qp.hess.noalias() +=
            2.0 * w1 * qp.resp_q1.row(k).transpose() * qp.resp_q1.row(k);
        qp.grad.noalias() -= 2.0 * w1 * e1 * qp.resp_q1.row(k).transpose();
        qp.constant += w1 * e1 * e1;
      }
      if (w2 != 0.0) {
        qp.hess.noalias() +=
            2.0 * w2 * qp.resp_q2.row(k).transpose() * qp.resp_q2.row(k);
        qp.grad.noalias() -= 2.0 * w2 * e2 * qp.resp_q2.row(k).transpose();
        qp.constant += w2 * e2 * e2;
      }
    }
    if (spec.beta_u != 0.0)
      qp.hess += 2.0 * spec.beta_u * Eigen::MatrixXd::Identity(m, m);

    // State constraints 0 <= x <= x_max at k = 1..n_rem, both compartments.
    qp.c_ineq.resize(4 * n_rem, m);
    qp.c_bound.resize(4 * n_rem);
    for (int k = 1; k <= n_rem; ++k) {
      const int r = 4 * (k - 1);
      qp.c_ineq.row(r) = qp.resp_q1.row(k);
      qp.c_bound(r) = spec.x_max - qp.free_q1(k);
      qp.c_ineq.row(r + 1) = -qp.resp_q1.row(k);
      qp.c_bound(r + 1) = qp.free_q1(k);
      qp.c_ineq.row(r + 2) = qp.resp_q2.row(k);
      qp.c_bound(r + 2) = spec.x_max - qp.free_q2(k);
      qp.c_ineq.row(r + 3) = -qp.resp_q2.row(k);
      qp.c_bound(r + 3) = qp.free_q2(k);
    }
    return qp;
  }
};

gl::Trajectory reconstruct(const CondensedQp& qp, const Eigen::VectorXd& u) {
  gl::Trajectory traj;
  const int n = static_cast<int>(qp.free_q1.size());
  traj.times.resize(n);
  traj.q1.resize(n);
  traj.q2.resize(n);
  const Eigen::VectorXd x1 = qp.free_q1 + qp.resp_q1 * u;
  const Eigen::VectorXd x2 = qp.free_q2 + qp.resp_q2 * u;
  for (int k = 0; k < n; ++k) {
    traj.times[k] = k * qp.t_c;
    traj.q1[k] = x1(k);
    traj.q2[k] = x2(k);
  }
  return traj;
}

// Accelerated projected gradient for min 0.5 u'H u + q'u on the box.
// Returns the iterate and the number of iterations consumed.
int box_apg(const Eigen::MatrixXd& h, const Eigen::VectorXd& q, double u_max,
            double lip, double tol, int cap, Eigen::VectorXd& u) {
  const int n = static_cast<int>(u.size());
  auto clamp = [&](Eigen::VectorXd v) {
    for (int i = 0; i < n; ++i) v(i) = std::min(std::max(v(i), 0.0), u_max);
    return v;
  };
  Eigen::VectorXd y = u;
  Eigen::VectorXd u_prev = u;
  double theta = 1.0;
  int it = 0;
  for (; it < cap; ++it) {
    const Eigen::VectorXd grad_y = h * y + q;
    Eigen::VectorXd u_new = clamp(y - grad_y / lip);
    // restart on non-monotone progress
    if ((u_new - u_prev).dot(y - u_new) > 0) {
      y = u_prev;
      theta = 1.0;
      const Eigen::VectorXd g2 = h * y + q;
      u_new = clamp(y - g2 / lip);
    }
    const double theta_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
    y = u_new + (theta - 1.0) / theta_new * (u_new - u_prev);
    theta = theta_new;
    u_prev = u_new;
    const Eigen::VectorXd res = u_new - clamp(u_new - (h * u_new + q));
    if (res.lpNorm<Eigen::Infinity>() <= tol) {
      u = u_new;
      return it + 1;
    }
  }
  u = u_prev;
  return it;
}

struct KktResidual {
  double stationarity = 0.0;
  double primal = 0.0;
  double complementarity = 0.0;
  double max() const { return std::max({stationarity, primal, complementarity}); }
};

KktResidual kkt_residuals(const CondensedQp& qp, const Eigen::VectorXd& u,
                          const Eigen::VectorXd& lambda) {
  KktResidual r;
  const Eigen::VectorXd grad_l = qp.hess * u + qp.grad + qp.c_ineq.transpose() * lambda;
  Eigen::VectorXd proj = u - grad_l;
  for (int i = 0; i < proj.size(); ++i)
    proj(i) = std::min(std::max(proj(i), 0.0), qp.u_max);
  r.stationarity = (u - proj).lpNorm<Eigen::Infinity>();
  const Eigen::VectorXd slack = qp.c_ineq * u - qp.c_bound;
  for (int i = 0; i < slack.size(); ++i) {
    r.primal = std::max(r.primal, slack(i));
    r.complementarity = std::max(r.complementarity, std::abs(lambda(i) * slack(i)));
  }
  r.primal = std::max(r.primal, 0.0);
  return r;
}

}  // namespace

std::size_t default_nu(const OcpSpec& spec) {
  return static_cast<std::size_t>(std::ceil(5.0 / spec.t_c));
}

int n_doses(const OcpSpec& spec) {
  const double nd = spec.n_days / spec.t_d;
  const int n = static_cast<int>(std::lround(nd));
  if (n < 1 || std::abs(nd - n) > 1e-9)
    throw std::invalid_argument("OcpSpec: n_days must be a multiple of t_d");
  return n;
}

int horizon_steps(const OcpSpec& spec) {
  const double ns = spec.n_days / spec.t_c;
  const int n = static_cast<int>(std::lround(ns));
  if (n < 1 || std::abs(ns - n) > 1e-6)
    throw std::invalid_argument("OcpSpec: n_days must be a multiple of t_c");
  return n;
}

CondensedQp build_qp(const OcpSpec& spec, const pk::TwoCompParams& model) {
  Condenser cond(spec, model);
  const double h1[1] = {spec.x0[0]};
  const double h2[1] = {spec.x0[1]};
  return cond.build(std::span<const double>(h1, 1), std::span<const double>(h2, 1),
                    Eigen::Vector2d::Zero(), 0);
}

DosingPlan solve_qp(const CondensedQp& qp, double tol) {
  const int n = static_cast<int>(qp.hess.cols());
  DosingPlan plan;
  plan.doses = Eigen::VectorXd::Zero(n);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(qp.hess);
  const double lmax = std::max(es.eigenvalues().maxCoeff(), 1e-300);
  const double lmin = es.eigenvalues().minCoeff();
  double ridge = 0.0;
  if (lmin < 1e-10 * lmax) ridge = 1e-10 * lmax;  // dual smoothness
  const Eigen::MatrixXd h_reg =
      qp.hess + ridge * Eigen::MatrixXd::Identity(n, n);
  const double lip = lmax + ridge;

  const int total_cap = 100000;
  int used = 0;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(qp.c_bound.size());

  // Fast path: state constraints often stay inactive at these dose scales.
  used += box_apg(h_reg, qp.grad, qp.u_max, lip, tol * 1e-2, total_cap, u);
  KktResidual kkt = kkt_residuals(qp, u, lambda);
  if (kkt.max() > tol) {
    // Dual accelerated ascent on the state constraints.
    const double sig_c = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
                             qp.c_ineq.transpose() * qp.c_ineq)
                             .eigenvalues()
                             .maxCoeff();
    const double l_dual = std::max(sig_c / std::max(lmin + ridge, 1e-12), 1e-12);
    Eigen::VectorXd lam_prev = lambda;
    Eigen::VectorXd mu = lambda;
    double theta = 1.0;
    double best_kkt = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_u = u, best_lam = lambda;
    while (used < total_cap) {
      Eigen::VectorXd q_in = qp.grad + qp.c_ineq.transpose() * mu;
      used += box_apg(h_reg, q_in, qp.u_max, lip, tol * 1e-2, total_cap - used, u);
      Eigen::VectorXd lam_new =
          (mu + (qp.c_ineq * u - qp.c_bound) / l_dual).cwiseMax(0.0);
      const double theta_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
      mu = lam_new + (theta - 1.0) / theta_new * (lam_new - lam_prev);
      // restart heuristic
      if ((lam_new - lam_prev).dot(mu - lam_new) > 0) {
        mu = lam_new;
        theta = 1.0;
      } else {
        theta = theta_new;
      }
      lam_prev = lam_new;
      lambda = lam_new;
      kkt = kkt_residuals(qp, u, lambda);
      if (kkt.max() < best_kkt) {
        best_kkt = kkt.max();
        best_u = u;
        best_lam = lambda;
      }
      if (kkt.max() <= tol) break;
    }
    if (kkt.max() > tol) {
      u = best_u;
      lambda = best_lam;
      kkt = kkt_residuals(qp, u, lambda);
      plan.converged = false;
    }
  }

  // Bounds hold exactly by projection; clean up round-off.
  for (int i = 0; i < n; ++i) u(i) = std::min(std::max(u(i), 0.0), qp.u_max);
  plan.doses = u;
  plan.kkt_residual = kkt_residuals(qp, u, lambda).max();
  plan.converged = plan.converged && plan.kkt_residual <= tol * 10.0;
  plan.objective = 0.5 * u.dot(qp.hess * u) + qp.grad.dot(u) + qp.constant;
  plan.predicted = reconstruct(qp, u);
  return plan;
}

DosingPlan plan_individual(const OcpSpec& spec, const pk::TwoCompParams& model) {
  return solve_qp(build_qp(spec, model), 1e-8);
}

double cost_tracking_energy(const OcpSpec& spec, const gl::Trajectory& traj,
                            const Eigen::VectorXd& doses) {
  double acc = 0.0;
  for (std::size_t k = 0; k < traj.q1.size(); ++k) {
    const double e1 =
        (spec.ref_q1_traj.empty() ? spec.ref_q1 : spec.ref_q1_traj[k]) - traj.q1[k];
    const double e2 =
        (spec.ref_q2_traj.empty() ? spec.ref_q2 : spec.ref_q2_traj[k]) - traj.q2[k];
    acc += spec.q_weights[0] * e1 * e1 + spec.q_weights[1] * e2 * e2;
  }
  acc += spec.beta_u * doses.squaredNorm();
  return acc;
}

double cost_window(const OcpSpec& spec, const gl::Trajectory& traj,
                   const Eigen::Vector2d& x_lo, const Eigen::Vector2d& x_hi) {
  (void)spec;
  auto dist2 = [](double x, double lo, double hi) {
    const double d = (x < lo) ? lo - x : (x > hi ? x - hi : 0.0);
    return d * d;
  };
  double acc = 0.0;
  for (std::size_t k = 0; k < traj.q1.size(); ++k) {
    acc += dist2(traj.q1[k], x_lo[0], x_hi[0]);
    acc += dist2(traj.q2[k], x_lo[1], x_hi[1]);
  }
  return acc;
}

namespace {

double eval_cost(const CondensedQp& qp, const Eigen::VectorXd& u) {
  return 0.5 * u.dot(qp.hess * u) + qp.grad.dot(u) + qp.constant;
}

double max_violation(const CondensedQp& qp, const Eigen::VectorXd& u) {
  if (qp.c_bound.size() == 0) return 0.0;
  return (qp.c_ineq * u - qp.c_bound).maxCoeff();
}

}  // namespace

std::vector<pk::TwoCompParams> box_vertices(const ParamBox& box) {
  std::vector<pk::TwoCompParams> out;
  out.reserve(16);
  for (int mask = 0; mask < 16; ++mask) {
    pk::TwoCompParams p = box.lo;
    p.k10 = (mask & 1) ? box.hi.k10 : box.lo.k10;
    p.k12 = (mask & 2) ? box.hi.k12 : box.lo.k12;
    p.k21f = (mask & 4) ? box.hi.k21f : box.lo.k21f;
    p.alpha = (mask & 8) ? box.hi.alpha : box.lo.alpha;
    out.push_back(p);
  }
  return out;
}

DosingPlan plan_minimax(const OcpSpec& spec, const ParamBox& box) {
  auto mid = [&](auto sel) { return 0.5 * (sel(box.lo) + sel(box.hi)); };
  pk::TwoCompParams center = box.lo;
  center.k10 = mid([](const pk::TwoCompParams& p) { return p.k10; });
  center.k12 = mid([](const pk::TwoCompParams& p) { return p.k12; });
  center.k21f = mid([](const pk::TwoCompParams& p) { return p.k21f; });
  center.alpha = mid([](const pk::TwoCompParams& p) { return p.alpha; });

  const bool degenerate =
      box.lo.k10 == box.hi.k10 && box.lo.k12 == box.hi.k12 &&
      box.lo.k21f == box.hi.k21f && box.lo.alpha == box.hi.alpha;
  if (degenerate) return plan_individual(spec, center);

  // 2^4 vertex problems.
  const std::vector<pk::TwoCompParams> vertices = box_vertices(box);
  std::vector<CondensedQp> vqp;
  vqp.reserve(vertices.size());
  for (const auto& p : vertices) vqp.push_back(build_qp(spec, p));

  auto worst = [&](const Eigen::VectorXd& u) {
    double w = -std::numeric_limits<double>::infinity();
    int arg = 0;
    for (int i = 0; i < 16; ++i) {
      const double c = eval_cost(vqp[i], u);
      if (c > w) {
        w = c;
        arg = i;
      }
    }
    return std::pair<double, int>(w, arg);
  };
  auto feasible = [&](const Eigen::VectorXd& u) {
    for (const auto& q : vqp)
      if (max_violation(q, u) > 1e-8) return false;
    return true;
  };

  DosingPlan start = plan_individual(spec, center);
  Eigen::VectorXd u = start.doses;
  if (!feasible(u)) u.setZero();  // always feasible for x0 inside the bounds
  Eigen::VectorXd best_u = u;
  double best_w = worst(u).first;

  double step0 = 0.0;
  {
    const auto [w0, i0] = worst(u);
    const Eigen::VectorXd g0 = vqp[i0].hess * u + vqp[i0].grad;
    step0 = (g0.norm() > 0) ? 0.5 * spec.u_max / g0.norm() : 0.0;
  }
  for (int it = 1; it <= 200 && step0 > 0; ++it) {
    const auto [w, iw] = worst(u);
    Eigen::VectorXd g = vqp[iw].hess * u + vqp[iw].grad;
    double step = step0 / std::sqrt(static_cast<double>(it));
    Eigen::VectorXd cand;
    bool ok = false;
    for (int half = 0; half < 12; ++half) {
      cand = u - step * g;
      for (int i = 0; i < cand.size(); ++i)
        cand(i) = std::min(std::max(cand(i), 0.0), spec.u_max);
      if (feasible(cand)) {
        ok = true;
        break;
      }
      step *= 0.5;
    }
    if (!ok) break;
    u = cand;
    const double wc = worst(u).first;
    if (wc < best_w) {
      best_w = wc;
      best_u = u;
    }
  }

  const auto [w_final, i_final] = worst(best_u);
  DosingPlan plan;
  plan.doses = best_u;
  plan.objective = w_final;
  plan.kkt_residual = kkt_residuals(vqp[i_final], best_u,
                                    Eigen::VectorXd::Zero(vqp[i_final].c_bound.size()))
                          .primal;
  plan.converged = true;
  plan.predicted = reconstruct(vqp[i_final], best_u);
  return plan;
}

PopulationSample sample_population(const pk::TwoCompParams& nominal, double cv,
                                   int l, std::uint64_t seed) {
  if (l < 1) throw std::invalid_argument("sample_population: l >= 1");
  if (cv < 0) throw std::invalid_argument("sample_population: cv >= 0");
  pk::validate(nominal);
  PopulationSample out;
  out.seed = seed;
  out.generation = "lognormal rates cv=" + std::to_string(cv) + ", logit-normal alpha";
  out.members.reserve(l);
  SplitMix64 rng(seed ^ 0x5eedULL);
  const double sigma = std::sqrt(std::log1p(cv * cv));
  const double adj = -0.5 * sigma * sigma;  // exact-mean lognormal
  for (int i = 0; i < l; ++i) {
    pk::TwoCompParams p = nominal;
    if (cv > 0) {
      p.k10 = nominal.k10 * std::exp(sigma * rng.normal() + adj);
      p.k12 = nominal.k12 * std::exp(sigma * rng.normal() + adj);
      p.k21f = nominal.k21f * std::exp(sigma * rng.normal() + adj);
      if (nominal.alpha < 1.0 - 1e-12) {
        const double eta = std::log(nominal.alpha / (1.0 - nominal.alpha)) +
                           cv * rng.normal();
        p.alpha = 1.0 / (1.0 + std::exp(-eta));
        p.alpha = std::min(std::max(p.alpha, 0.05), 1.0);
      }
    }
    out.members.push_back(p);
  }
  return out;
}

DosingPlan plan_stochastic(const OcpSpec& spec, const PopulationSample& sample) {
  if (sample.members.empty())
    throw std::invalid_argument("plan_stochastic: empty sample");
  const int l = static_cast<int>(sample.members.size());
  std::vector<CondensedQp> qps;
  qps.reserve(l);
  for (const auto& m : sample.members) qps.push_back(build_qp(spec, m));

  CondensedQp avg = qps[0];
  const int n = static_cast<int>(avg.hess.cols());
  avg.hess.setZero();
  avg.grad.setZero();
  avg.constant = 0.0;
  long rows = 0;
  for (const auto& q : qps) rows += q.c_bound.size();
  avg.c_ineq.resize(rows, n);
  avg.c_bound.resize(rows);
  long at = 0;
  for (const auto& q : qps) {
    avg.hess += q.hess / l;
    avg.grad += q.grad / l;
    avg.constant += q.constant / l;
    avg.c_ineq.middleRows(at, q.c_bound.size()) = q.c_ineq;
    avg.c_bound.segment(at, q.c_bound.size()) = q.c_bound;
    at += q.c_bound.size();
  }

  DosingPlan plan = solve_qp(avg, 1e-8);
  // predicted trajectory: the population-average response to the shared plan
  gl::Trajectory mean = reconstruct(qps[0], plan.doses);
  for (int i = 1; i < l; ++i) {
    const gl::Trajectory ti = reconstruct(qps[i], plan.doses);
    for (std::size_t k = 0; k < mean.q1.size(); ++k) {
      mean.q1[k] += ti.q1[k];
      mean.q2[k] += ti.q2[k];
    }
  }
  for (std::size_t k = 0; k < mean.q1.size(); ++k) {
    mean.q1[k] /= l;
    mean.q2[k] /= l;
  }
  plan.predicted = mean;
  return plan;
}

Eigen::MatrixXd OffsetFreeSystem::dense() const {
  const std::size_t nb = base.dim();
  if (!with_disturbance) return base.dense();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(nb + 2, nb + 2);
  a.topLeftCorner(nb, nb) = base.dense();
  a.block(0, nb, 2, 2) = Eigen::Matrix2d::Identity();  // E = [I2; 0]
  a.block(nb, nb, 2, 2) = Eigen::Matrix2d::Identity(); // d_{k+1} = d_k
  return a;
}

Eigen::VectorXd OffsetFreeSystem::dense_input() const {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(dim());
  b.head(base.dim()) = base.dense_input();
  return b;
}

Eigen::RowVectorXd OffsetFreeSystem::output_map() const {
  Eigen::RowVectorXd c = Eigen::RowVectorXd::Zero(dim());
  c(0) = 1.0;  // q1 of the newest block
  return c;
}

OffsetFreeSystem augment_offset_free(const gl::AugmentedLtiSystem& system) {
  OffsetFreeSystem s;
  s.base = system;
  s.with_disturbance = true;
  return s;
}

Eigen::VectorXd observer_gain(const OffsetFreeSystem& system, double w, double v) {
  if (!(w > 0) || !(v > 0))
    throw std::invalid_argument("observer_gain: noise scales must be > 0");
  const Eigen::MatrixXd a_sys = system.dense();
  const Eigen::RowVectorXd c_sys = system.output_map();
  const long n = a_sys.rows();

  // Filter DARE P = A P A' - A P C'(C P C' + v)^{-1} C P A' + w I solved by
  // the structure-preserving doubling algorithm on the transposed pencil.
  Eigen::MatrixXd ak = a_sys.transpose();
  Eigen::MatrixXd gk = c_sys.transpose() * c_sys / v;
  Eigen::MatrixXd hk = w * Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  for (int it = 0; it < 200; ++it) {
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(eye + gk * hk);
    const Eigen::MatrixXd m_ak = lu.solve(ak);
    const Eigen::MatrixXd m_gk = lu.solve(gk);
    const Eigen::MatrixXd a_next = ak * m_ak;
    const Eigen::MatrixXd g_next = gk + ak * m_gk * ak.transpose();
    const Eigen::MatrixXd h_next = hk + ak.transpose() * hk * m_ak;
    const double delta = (h_next - hk).norm() / std::max(h_next.norm(), 1e-300);
    ak = a_next;
    gk = 0.5 * (g_next + g_next.transpose());
    hk = 0.5 * (h_next + h_next.transpose());
    if (delta < 1e-10) break;
    if (it == 199)
      throw NonConvergenceError("observer_gain: Riccati doubling did not settle");
  }
  const Eigen::VectorXd pc = hk * c_sys.transpose();
  const double innov = (c_sys * pc)(0) + v;
  return pc / innov;
}

Eigen::VectorXd observer_update(const OffsetFreeSystem& system,
                                const Eigen::VectorXd& gain,
                                const Eigen::VectorXd& estimate,
                                double measurement, double input) {
  const std::size_t nb = system.base.dim();
  const std::size_t nu = system.base.nu;
  if (static_cast<std::size_t>(estimate.size()) != system.dim())
    throw std::invalid_argument("observer_update: estimate dimension mismatch");

  // Predict: advance the stacked blocks by one step (shift register) plus the
  // disturbance feed-through on the physical block.
  Eigen::VectorXd pred = Eigen::VectorXd::Zero(estimate.size());
  Eigen::Vector2d acc = Eigen::Vector2d::Zero();
  for (std::size_t j = 0; j < nu; ++j)
    acc += system.base.conv[j] * estimate.segment<2>(2 * j);
  const Eigen::Vector2d xk = estimate.head<2>();
  Eigen::Vector2d top = xk + system.base.t_c * (system.base.a * xk) +
                        system.base.f * acc + system.base.t_c * system.base.b * input;
  if (system.with_disturbance) top += estimate.segment<2>(nb);
  pred.head<2>() = top;
  pred.segment(2, nb - 2) = estimate.head(nb - 2);
  if (system.with_disturbance) pred.segment<2>(nb) = estimate.segment<2>(nb);

  const double innovation = measurement - pred(0);
  Eigen::VectorXd corrected = pred + gain * innovation;
  if (!corrected.allFinite())
    throw NumericalFailure("observer_update: non-finite estimate");
  return corrected;
}

MpcLog mpc_run(const OcpSpec& spec, const pk::TwoCompParams& plant,
               const pk::TwoCompParams& model, const MpcOptions& options) {
  const std::size_t nu = spec.nu > 0 ? spec.nu : default_nu(spec);
  OcpSpec wspec = spec;
  wspec.nu = nu;

  Condenser cond(wspec, model);
  const int n_total = cond.n_total_steps;
  const int spd = cond.spd;
  const int nd = cond.n_total_doses;

  gl::AugmentedLtiSystem sys_p = gl::discretize_two_comp(plant, wspec.t_c, nu);
  OffsetFreeSystem obs_sys = augment_offset_free(cond.sys);
  obs_sys.with_disturbance = options.offset_free;
  const Eigen::VectorXd gain = observer_gain(obs_sys, options.obs_w, options.obs_v);

  Stepper plant_st(sys_p);
  plant_st.reset(wspec.x0);
  Eigen::VectorXd estimate = Eigen::VectorXd::Zero(obs_sys.dim());
  estimate.head<2>() = wspec.x0;

  SplitMix64 rng(options.seed ^ 0xfeedULL);
  MpcLog log;
  log.qp_failure = false;
  double u_prev = 0.0;

  for (int k = 0; k < n_total; ++k) {
    double u_now = 0.0;
    if (k % spd == 0 && k / spd < nd) {
      const int dose_idx = k / spd;
      // newest-first history windows from the stacked estimate
      std::vector<double> h1(nu), h2(nu);
      for (std::size_t j = 0; j < nu; ++j) {
        h1[j] = estimate(2 * j);
        h2[j] = estimate(2 * j + 1);
      }
      Eigen::Vector2d d_est = Eigen::Vector2d::Zero();
      if (options.offset_free) d_est = estimate.segment<2>(obs_sys.base.dim());
      try {
        const CondensedQp qp = cond.build(h1, h2, d_est, dose_idx);
        DosingPlan plan = solve_qp(qp, options.qp_tol);
        u_now = plan.doses(0);
      } catch (const std::exception&) {
        log.qp_failure = true;
        u_now = u_prev;  // hold the previous dose
      }
      u_prev = u_now;
    }

    const Eigen::Vector2d x_true =
        plant_st.step(u_now, options.plant_bias[0], options.plant_bias[1]);
    const double noise =
        options.meas_noise_sd > 0 ? options.meas_noise_sd * rng.normal() : 0.0;
    const double y = x_true[0] + noise;
    estimate = observer_update(obs_sys, gain, estimate, y, u_now);

    log.t.push_back((k + 1) * wspec.t_c);
    log.u.push_back(u_now);
    log.q1_true.push_back(x_true[0]);
    log.q2_true.push_back(x_true[1]);
    log.q1_est.push_back(estimate(0));
    log.q2_est.push_back(estimate(1));
    if (options.offset_free) {
      log.d1_est.push_back(estimate(obs_sys.base.dim()));
      log.d2_est.push_back(estimate(obs_sys.base.dim() + 1));
    } else {
      log.d1_est.push_back(0.0);
      log.d2_est.push_back(0.0);
    }
    log.c.push_back(x_true[0] / plant.v);
  }
  return log;
}

}  // namespace fracdose::dosing
