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

#ifndef FRACDOSE_GLKERNEL_HPP
#define FRACDOSE_GLKERNEL_HPP

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fracdose/pktypes.hpp"

namespace fracdose::gl {

// Binomial-type coefficients of the Grunwald-Letnikov difference:
//   c_0 = 1,  c_j = c_{j-1} * (1 - (1+alpha)/j).
struct GlCoefficients {
  double alpha = 0.0;
  std::vector<double> coeffs;
};

GlCoefficients gl_coefficients(double alpha, std::size_t n);

// Truncated GL difference of order alpha and step h evaluated at the last
// sample:  h^{-alpha} * sum_{j=0}^{min(nu, floor(t/h))} c_j f(t - j h).
// samples[0] is f(0); samples.back() is f(t).
double gl_difference(std::span<const double> samples, double alpha, double h,
                     std::size_t nu);

// Finite-memory discretisation of the two-compartment model as a linear
// system on the stacked state (x_k, x_{k-1}, ..., x_{k-nu+1}),
//   x_{k+1} = x_k + t_c (A x_k + F t_c^{-(1-alpha)} sum_j c_j^{1-alpha} x_{k-j}
//                         + B u_k),
// A = [[-(k12+k10), 0], [k12, 0]], F = [[0, k21f], [0, -k21f]], B = [1, 0]'.
// Stored block-sparse: the dense 2nu x 2nu matrix has the 2x2 convolution
// blocks along the top row and an identity shift below; dense() materialises
// it for small nu.
struct AugmentedLtiSystem {
  Eigen::Matrix2d a;          // continuous-time integer-order part
  Eigen::Matrix2d f;          // fractional-difference coupling
  Eigen::Vector2d b;          // input map
  std::vector<double> conv;   // t_c^alpha-weighted c_j^{1-alpha}, j = 0..nu-1
  double t_c = 0.0;
  std::size_t nu = 0;
  int state_dim = 2;

  std::size_t dim() const { return state_dim * nu; }
  Eigen::MatrixXd dense() const;        // A-hat, (2nu x 2nu)
  Eigen::VectorXd dense_input() const;  // B-hat, (2nu x 1)
  // Top-block update given the history x_k, x_{k-1}, ... (most recent first).
  Eigen::Vector2d step(std::span<const Eigen::Vector2d> history, double u) const;
};

AugmentedLtiSystem discretize_two_comp(const pk::TwoCompParams& model, double t_c,
                                       std::size_t nu);

struct Trajectory {
  std::vector<double> times;
  std::vector<double> q1;
  std::vector<double> q2;
};

// Runs the recursion for `steps` steps from physical state x0 (pre-history is
// drug-free, i.e. zero). u must hold one rate per step, or a single value that
// is extended as a constant. Aborts with NumericalFailure on non-finite state.
Trajectory simulate_gl(const AugmentedLtiSystem& system, const Eigen::Vector2d& x0,
                       std::span<const double> u, std::size_t steps);

}  // namespace fracdose::gl

#endif  // FRACDOSE_GLKERNEL_HPP
