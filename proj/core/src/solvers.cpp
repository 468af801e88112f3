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

#include "fracdose/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "fracdose/errors.hpp"
#include "fracdose/specialfn.hpp"

namespace fracdose::solvers {

namespace sf = fracdose::special;

CommensurateSystem expand_commensurate(const pk::TwoCompParams& params, int q_denom) {
  pk::validate(params);
  if (q_denom < 1) throw std::invalid_argument("expand_commensurate: q_denom >= 1");
  CommensurateSystem sys;
  sys.q = q_denom;
  sys.p = static_cast<int>(std::lround((1.0 - params.alpha) * q_denom));
  if (sys.p > q_denom - 1)
    throw std::invalid_argument(
        "expand_commensurate: alpha too small for this q (p = q)");
  sys.gamma = 1.0 / q_denom;
  sys.d = 2 * q_denom;
  sys.approx_gap = std::abs((1.0 - params.alpha) - static_cast<double>(sys.p) / q_denom);
  sys.approx_warning = sys.approx_gap > 0.02;

  const int q = q_denom;
  sys.a = Eigen::MatrixXd::Zero(sys.d, sys.d);
  for (int i = 0; i + 1 < q; ++i) sys.a(i, i + 1) = 1.0;
  sys.a(q - 1, 0) = -(params.k12 + params.k10);
  sys.a(q - 1, q + sys.p) = params.k21f;
  for (int i = q; i + 1 < 2 * q; ++i) sys.a(i, i + 1) = 1.0;
  sys.a(2 * q - 1, 0) = params.k12;
  sys.a(2 * q - 1, q + sys.p) = -params.k21f;

  sys.b = Eigen::VectorXd::Zero(sys.d);
  sys.b(q - 1) = 1.0;
  sys.x0 = Eigen::VectorXd::Zero(sys.d);
  sys.x0(0) = params.q10;
  // x_q(0) = q2(0) = 0 for the i.v. bolus model
  return sys;
}

namespace {

void check_problem(const FivpProblem& p) {
  if (!(p.gamma > 0.0 && p.gamma <= 1.0))
    throw std::invalid_argument("fivp: gamma must lie in (0, 1]");
  if (!(p.h > 0.0) || !(p.t_end >= p.h))
    throw std::invalid_argument("fivp: requires h > 0 and t_end >= h");
  if (!p.rhs) throw std::invalid_argument("fivp: missing rhs");
}

}  // namespace

SolveResult abmpc_solve(const FivpProblem& problem) {
  check_problem(problem);
  const double g = problem.gamma;
  const double h = problem.h;
  const int d = static_cast<int>(problem.x0.size());
  const std::size_t n_steps = static_cast<std::size_t>(std::llround(problem.t_end / h));

  const double hg_g1 = std::pow(h, g) / sf::gamma_real(g + 1.0);
  const double hg_g2 = std::pow(h, g) / sf::gamma_real(g + 2.0);

  // Kernels indexed by the lag m = n - j:
  //   predictor  b(m) = (m+1)^g - m^g
  //   corrector  a(m) = (m+2)^{g+1} + m^{g+1} - 2 (m+1)^{g+1}   (interior)
  Eigen::VectorXd bk(n_steps + 1), ak(n_steps + 1);
  for (std::size_t m = 0; m <= n_steps; ++m) {
    const double md = static_cast<double>(m);
    bk(m) = std::pow(md + 1.0, g) - std::pow(md, g);
    ak(m) = std::pow(md + 2.0, g + 1.0) + std::pow(md, g + 1.0) -
            2.0 * std::pow(md + 1.0, g + 1.0);
  }

  // rhs history stored newest-last-reversed: column (n_steps - j) holds f_j,
  // so each lag sum is a contiguous matrix-vector product.
  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(d, n_steps + 1);
  SolveResult out;
  out.times.resize(n_steps + 1);
  out.states.resize(n_steps + 1, d);
  out.states.row(0) = problem.x0.transpose();
  out.times[0] = 0.0;
  if (g < 0.1)
    out.warnings.push_back("gamma < 0.1: poor accuracy and convergence expected");
  fb.col(n_steps) = problem.rhs(0.0, problem.x0);

  Eigen::VectorXd pred(d), corr(d);
  for (std::size_t n = 0; n < n_steps; ++n) {
    const double t_next = static_cast<double>(n + 1) * h;
    const auto hist = fb.middleCols(n_steps - n, n + 1);  // f_n .. f_0 reversed
    pred = problem.x0 + hg_g1 * (hist * bk.head(n + 1));

    const double nd = static_cast<double>(n);
    const double a0 =
        std::pow(nd, g + 1.0) - (nd - g) * std::pow(nd + 1.0, g);
    Eigen::VectorXd lag = a0 * fb.col(n_steps);  // j = 0 boundary weight
    if (n >= 1)
      lag += fb.middleCols(n_steps - n, n) * ak.head(n);  // j = 1..n interior
    corr = problem.x0 + hg_g2 * (problem.rhs(t_next, pred) + lag);
    if (!corr.allFinite())
      throw NumericalFailure("abmpc_solve: non-finite state at step " +
                             std::to_string(n + 1));
    out.states.row(n + 1) = corr.transpose();
    out.times[n + 1] = t_next;
    fb.col(n_steps - n - 1) = problem.rhs(t_next, corr);
  }
  return out;
}

namespace {

// Coefficients of ((1+z)/(2(1-z)))^gamma by the first-order recurrence
// (1-z^2) w' = 2 gamma w  =>  (n+1) w_{n+1} = 2 gamma w_n + (n-1) w_{n-1}.
Eigen::VectorXd trapezoidal_weights(double gamma, std::size_t n) {
  Eigen::VectorXd w(n + 1);
  w(0) = std::pow(2.0, -gamma);
  if (n >= 1) w(1) = 2.0 * gamma * w(0);
  for (std::size_t k = 1; k < n; ++k)
    w(k + 1) = (2.0 * gamma * w(k) + (k - 1.0) * w(k - 1)) / (k + 1.0);
  return w;
}

}  // namespace

SolveResult flmm_trapezoidal_solve(const FivpProblem& problem, int starting_terms) {
  check_problem(problem);
  const double g = problem.gamma;
  const double h = problem.h;
  const int d = static_cast<int>(problem.x0.size());
  const std::size_t n_steps = static_cast<std::size_t>(std::llround(problem.t_end / h));
  const int s = starting_terms > 0 ? starting_terms
                                   : static_cast<int>(std::ceil(1.0 / g));
  if (static_cast<std::size_t>(s) > n_steps)
    throw std::invalid_argument("flmm: fewer steps than starting weights");

  const Eigen::VectorXd om = trapezoidal_weights(g, n_steps);
  const double hg = std::pow(h, g);

  // Moment matrix M(k,j) = j^{k g} shared by all starting-weight solves.
  Eigen::MatrixXd moments(s + 1, s + 1);
  for (int k = 0; k <= s; ++k)
    for (int j = 0; j <= s; ++j)
      moments(k, j) = (j == 0) ? (k == 0 ? 1.0 : 0.0)
                               : std::pow(static_cast<double>(j), k * g);
  Eigen::PartialPivLU<Eigen::MatrixXd> mom_lu(moments);

  // phi_k(j) = j^{k g}, stored reversed so the rhs convolutions are contiguous.
  Eigen::MatrixXd phi_rev(n_steps + 1, s + 1);
  for (std::size_t j = 0; j <= n_steps; ++j)
    for (int k = 0; k <= s; ++k)
      phi_rev(n_steps - j, k) =
          (j == 0) ? (k == 0 ? 1.0 : 0.0)
                   : std::pow(static_cast<double>(j), k * g);

  // Exactness targets Gamma(kg+1)/Gamma((k+1)g+1) n^{(k+1)g}.
  Eigen::VectorXd target_coef(s + 1);
  for (int k = 0; k <= s; ++k)
    target_coef(k) = std::exp(sf::lgamma_real(k * g + 1.0) -
                              sf::lgamma_real((k + 1.0) * g + 1.0));

  SolveResult out;
  out.times.resize(n_steps + 1);
  out.states.resize(n_steps + 1, d);
  out.states.row(0) = problem.x0.transpose();
  out.times[0] = 0.0;
  if (g < 0.1)
    out.warnings.push_back("gamma < 0.1: poor accuracy and convergence expected");

  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(d, n_steps + 1);  // reversed rhs history
  fb.col(n_steps) = problem.rhs(0.0, problem.x0);
  Eigen::MatrixXd w_start(s + 1, 1);

  auto starting_weights = [&](std::size_t n) {
    Eigen::VectorXd rhs(s + 1);
    const auto omh = om.head(n + 1);
    for (int k = 0; k <= s; ++k) {
      const double conv = omh.dot(phi_rev.col(k).segment(n_steps - n, n + 1));
      rhs(k) = target_coef(k) * std::pow(static_cast<double>(n), (k + 1.0) * g) - conv;
    }
    return Eigen::VectorXd(mom_lu.solve(rhs));
  };

  const int fp_cap = 50;
  const double fp_tol = 1e-12;

  auto solve_step = [&](std::size_t n, const Eigen::VectorXd& lagged, double cn) {
    // x = x0 + lagged + h^g cn f(t_n, x), fixed point in x
    const double t_n = static_cast<double>(n) * h;
    Eigen::VectorXd x = out.states.row(n > 0 ? n - 1 : 0).transpose();
    for (int it = 0; it < fp_cap; ++it) {
      Eigen::VectorXd x_new = problem.x0 + lagged + hg * cn * problem.rhs(t_n, x);
      const double delta = (x_new - x).norm();
      x = x_new;
      if (delta <= fp_tol * (1.0 + x.norm())) return x;
    }
    throw NumericalFailure("flmm: fixed-point iteration cap exceeded at step " +
                           std::to_string(n));
  };

  // Early block n = 1..s is coupled through the starting weights; sweep until
  // the block settles.
  std::vector<Eigen::VectorXd> wn(s + 1);
  for (int n = 1; n <= s; ++n) wn[n] = starting_weights(n);
  for (int n = 1; n <= s; ++n) {
    out.states.row(n) = out.states.row(n - 1);
    out.times[n] = n * h;
    fb.col(n_steps - n) = problem.rhs(out.times[n], out.states.row(n).transpose());
  }
  for (int sweep = 0; sweep < 200; ++sweep) {
    double delta = 0.0;
    for (int n = 1; n <= s; ++n) {
      Eigen::VectorXd lag = Eigen::VectorXd::Zero(d);
      for (int j = 0; j <= s; ++j)
        if (j != n) lag += wn[n](j) * fb.col(n_steps - j);
      for (int j = 0; j < n; ++j) lag += om(n - j) * fb.col(n_steps - j);
      lag *= hg;
      const double cn = om(0) + wn[n](n);
      const Eigen::VectorXd x = solve_step(n, lag, cn);
      delta = std::max(delta, (x - out.states.row(n).transpose()).norm());
      out.states.row(n) = x.transpose();
      fb.col(n_steps - n) = problem.rhs(out.times[n], x);
    }
    if (delta <= fp_tol * 10.0) break;
    if (sweep == 199)
      throw NumericalFailure("flmm: starting block did not converge");
  }

  for (std::size_t n = s + 1; n <= n_steps; ++n) {
    const Eigen::VectorXd w = starting_weights(n);
    Eigen::VectorXd lag = Eigen::VectorXd::Zero(d);
    for (int j = 0; j <= s; ++j) lag += w(j) * fb.col(n_steps - j);
    // omega lag over j = 0..n-1; in the reversed layout column l of the slice
    // holds f_{n-1-l}, whose weight is omega_{l+1}
    lag += fb.middleCols(n_steps - n + 1, n) * om.segment(1, n);
    lag *= hg;
    const Eigen::VectorXd x = solve_step(n, lag, om(0));
    if (!x.allFinite())
      throw NumericalFailure("flmm: non-finite state at step " + std::to_string(n));
    out.states.row(n) = x.transpose();
    out.times[n] = n * h;
    fb.col(n_steps - n) = problem.rhs(out.times[n], x);
  }
  return out;
}

ClosedFormResult linear_fde_closed_form(const CommensurateSystem& system,
                                        const pk::InputSignal& u, double t,
                                        int k_max) {
  if (t < 0) throw std::invalid_argument("linear_fde_closed_form: t >= 0");
  if (k_max < 1) throw std::invalid_argument("linear_fde_closed_form: k_max >= 1");
  const double g = system.gamma;
  const int d = system.d;
  ClosedFormResult out;
  if (t == 0.0) {
    out.x = system.x0;
    return out;
  }

  const double tg = std::pow(t, g);
  const Eigen::MatrixXd at = system.a * tg;  // A t^gamma
  const double anorm = at.operatorNorm();

  // Input moments I_k = int_0^t (t-tau)^{k g} u(tau) dtau, analytic per class.
  auto input_moment = [&](int k) -> double {
    const double kg = k * g;
    switch (u.kind) {
      case pk::InputKind::Zero:
        return 0.0;
      case pk::InputKind::Constant:
        return u.scale * std::pow(t, kg + 1.0) / (kg + 1.0);
      case pk::InputKind::PowerLaw: {
        // scale * Beta(kg+1, a) t^{kg+a}
        const double a = u.alpha;
        const double lb = sf::lgamma_real(kg + 1.0) + sf::lgamma_real(a) -
                          sf::lgamma_real(kg + 1.0 + a);
        return u.scale * std::exp(lb) * std::pow(t, kg + a);
      }
      case pk::InputKind::PiecewiseConstant: {
        double acc = 0.0;
        for (std::size_t i = 0; i < u.times.size() && u.times[i] < t; ++i) {
          const double lo = u.times[i];
          const double hi = (i + 1 < u.times.size()) ? std::min(u.times[i + 1], t) : t;
          if (hi <= lo) continue;
          acc += u.values[i] *
                 (std::pow(t - lo, kg + 1.0) - std::pow(t - hi, kg + 1.0)) /
                 (kg + 1.0);
        }
        return acc;
      }
      case pk::InputKind::ImpulseTrain: {
        double acc = 0.0;
        for (std::size_t i = 0; i < u.times.size() && u.times[i] <= t; ++i)
          acc += u.values[i] * ((t - u.times[i]) > 0 || kg == 0.0
                                    ? std::pow(t - u.times[i], kg)
                                    : 0.0);
        return acc;
      }
    }
    return 0.0;
  };

  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(d, d);  // A^k t^{k g}
  Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
  double max_term_norm = 0.0;
  for (int k = 0; k <= k_max; ++k) {
    const double rg_hom = sf::reciprocal_gamma(k * g + 1.0);
    x += rg_hom * (term * system.x0);
    if (u.kind != pk::InputKind::Zero) {
      const double rg_in = sf::reciprocal_gamma((k + 1.0) * g);
      // A^k t^{k g} / t^{k g} = A^k; moments carry the t power explicitly
      x += rg_in * input_moment(k) / std::pow(t, k * g) * (term * system.b);
    }
    max_term_norm = std::max(max_term_norm, term.operatorNorm() * rg_hom);
    term = term * at;
    if (!term.allFinite())
      throw NumericalFailure("linear_fde_closed_form: matrix power overflow");
  }

  // Spectral-norm tail of the homogeneous series plus the round-off floor.
  double tail = 0.0;
  double pk_norm = std::pow(anorm, k_max + 1.0);
  for (int k = k_max + 1; k <= k_max + 200; ++k) {
    const double term_bound = pk_norm * sf::reciprocal_gamma(k * g + 1.0);
    tail += std::abs(term_bound) * system.x0.norm();
    pk_norm *= anorm;
    if (!std::isfinite(pk_norm)) break;
    if (k > k_max + 5 && term_bound < 1e-18 * tail) break;
  }
  tail += max_term_norm * system.x0.norm() * 2.2e-16;
  out.tail_estimate = tail;
  out.truncation_warning = tail > 1e-6 * (x.norm() + 1e-12);
  out.x = x;
  return out;
}

}  // namespace fracdose::solvers
