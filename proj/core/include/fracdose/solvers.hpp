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

#ifndef FRACDOSE_SOLVERS_HPP
#define FRACDOSE_SOLVERS_HPP

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fracdose/pkmodels.hpp"
#include "fracdose/pktypes.hpp"

namespace fracdose::solvers {

// Commensurate-order chain expansion of the two-compartment model: with
// 1 - alpha ~= p/q the mixed-order system becomes D^gamma x = A x + B u with
// gamma = 1/q on 2q states; x_0 = q1, x_q = q2, x_{q+p} = D^{p gamma} q2.
struct CommensurateSystem {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  Eigen::VectorXd x0;
  double gamma = 1.0;
  int d = 0;
  int p = 0;
  int q = 0;
  bool approx_warning = false;  // |(1-alpha) - p/q| > 0.02
  double approx_gap = 0.0;
};

CommensurateSystem expand_commensurate(const pk::TwoCompParams& params, int q_denom);

// Fractional initial value problem D^gamma x = f(t, x), x(0) = x0, on [0, t_end]
// with uniform step h. Orders gamma in (0, 1].
struct FivpProblem {
  std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)> rhs;
  double gamma = 1.0;
  Eigen::VectorXd x0;
  double t_end = 1.0;
  double h = 1e-3;
};

struct SolveResult {
  std::vector<double> times;
  Eigen::MatrixXd states;  // (steps+1) x d, row per grid point
  std::vector<std::string> warnings;
};

// Adams-Bashforth-Moulton predictor-corrector with product-trapezoidal
// corrector weights and product-rectangle predictor weights; error O(h^{1+gamma}).
SolveResult abmpc_solve(const FivpProblem& problem);

// Trapezoidal fractional linear multistep method (convolution quadrature):
// weights from ((1+z)/(2(1-z)))^gamma, starting weights exact on t^{k gamma},
// k = 0..s. Implicit corrector solved by fixed-point iteration.
SolveResult flmm_trapezoidal_solve(const FivpProblem& problem, int starting_terms = -1);

struct ClosedFormResult {
  Eigen::VectorXd x;
  double tail_estimate = 0.0;
  bool truncation_warning = false;
};

// Matrix Mittag-Leffler solution of D^gamma x = A x + B u(t):
//   x(t) = E_gamma(A t^gamma) x0
//        + sum_k A^k B int_0^t (t-tau)^{k gamma}/Gamma((k+1) gamma) u(tau) dtau,
// series truncated at k_max with a spectral-norm tail estimate. The input
// convolution is integrated analytically per supported input class.
ClosedFormResult linear_fde_closed_form(const CommensurateSystem& system,
                                        const pk::InputSignal& u, double t,
                                        int k_max);

}  // namespace fracdose::solvers

#endif  // FRACDOSE_SOLVERS_HPP
