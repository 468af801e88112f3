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

#include "fracdose/glkernel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "fracdose/errors.hpp"

namespace fracdose::gl {

GlCoefficients gl_coefficients(double alpha, std::size_t n) {
  GlCoefficients out;
  out.alpha = alpha;
  out.coeffs.resize(n + 1);
  out.coeffs[0] = 1.0;
  for (std::size_t j = 1; j <= n; ++j)
    out.coeffs[j] = out.coeffs[j - 1] * (1.0 - (1.0 + alpha) / static_cast<double>(j));
  return out;
}

double gl_difference(std::span<const double> samples, double alpha, double h,
                     std::size_t nu) {
  if (samples.empty())
    throw std::invalid_argument("gl_difference: empty sample window");
  if (!(h > 0.0)) throw std::invalid_argument("gl_difference: requires h > 0");
  const std::size_t kmax = std::min(nu, samples.size() - 1);
  const GlCoefficients c = gl_coefficients(alpha, kmax);
  double acc = 0.0;
  const std::size_t last = samples.size() - 1;
  for (std::size_t j = 0; j <= kmax; ++j) acc += c.coeffs[j] * samples[last - j];
  return acc * std::pow(h, -alpha);
}

Eigen::MatrixXd AugmentedLtiSystem::dense() const {
  const std::size_t n = dim();
  Eigen::MatrixXd a_hat = Eigen::MatrixXd::Zero(n, n);
  a_hat.block<2, 2>(0, 0) = Eigen::Matrix2d::Identity() + t_c * a + conv[0] * f;
  for (std::size_t j = 1; j < nu; ++j) a_hat.block<2, 2>(0, 2 * j) = conv[j] * f;
  for (std::size_t j = 1; j < nu; ++j)
    a_hat.block<2, 2>(2 * j, 2 * (j - 1)) = Eigen::Matrix2d::Identity();
  return a_hat;
}

Eigen::VectorXd AugmentedLtiSystem::dense_input() const {
  Eigen::VectorXd b_hat = Eigen::VectorXd::Zero(dim());
  b_hat.head<2>() = t_c * b;
  return b_hat;
}

Eigen::Vector2d AugmentedLtiSystem::step(std::span<const Eigen::Vector2d> history,
                                         double u) const {
  const Eigen::Vector2d& xk = history[0];
  Eigen::Vector2d acc = Eigen::Vector2d::Zero();
  const std::size_t m = std::min(history.size(), nu);
  for (std::size_t j = 0; j < m; ++j) acc += conv[j] * history[j];
  return xk + t_c * (a * xk) + f * acc + t_c * b * u;
}

AugmentedLtiSystem discretize_two_comp(const pk::TwoCompParams& model, double t_c,
                                       std::size_t nu) {
  pk::validate(model);
  if (!(t_c > 0.0))
    throw std::invalid_argument("discretize_two_comp: requires t_c > 0");
  if (nu < 1) throw std::invalid_argument("discretize_two_comp: requires nu >= 1");
  AugmentedLtiSystem sys;
  sys.a << -(model.k12 + model.k10), 0.0, model.k12, 0.0;
  sys.f << 0.0, model.k21f, 0.0, -model.k21f;
  sys.b << 1.0, 0.0;
  sys.t_c = t_c;
  sys.nu = nu;
  const GlCoefficients c = gl_coefficients(1.0 - model.alpha, nu - 1);
  sys.conv.resize(nu);
  const double scale = std::pow(t_c, model.alpha);  // t_c * t_c^{-(1-alpha)}
  for (std::size_t j = 0; j < nu; ++j) sys.conv[j] = scale * c.coeffs[j];
  return sys;
}

Trajectory simulate_gl(const AugmentedLtiSystem& system, const Eigen::Vector2d& x0,
                       std::span<const double> u, std::size_t steps) {
  if (u.size() != 1 && u.size() < steps)
    throw std::invalid_argument("simulate_gl: input shorter than step count");
  Trajectory traj;
  traj.times.resize(steps + 1);
  traj.q1.resize(steps + 1);
  traj.q2.resize(steps + 1);

  // History kept newest-first in a backward-filled buffer so each step's
  // memory window is one contiguous slice; the convolution then runs as two
  // plain dot products.
  std::vector<double> h1(steps + 1), h2(steps + 1);
  h1[steps] = x0[0];
  h2[steps] = x0[1];
  traj.times[0] = 0.0;
  traj.q1[0] = x0[0];
  traj.q2[0] = x0[1];

  const double* cv = system.conv.data();
  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t base = steps - k;
    const std::size_t m = std::min(k + 1, system.nu);
    double s1 = 0.0, s2 = 0.0;
    const double* w1 = &h1[base];
    const double* w2 = &h2[base];
    for (std::size_t j = 0; j < m; ++j) {
      s1 += cv[j] * w1[j];
      s2 += cv[j] * w2[j];
    }
    const double uk = (u.size() == 1) ? u[0] : u[k];
    const Eigen::Vector2d xk(h1[base], h2[base]);
    const Eigen::Vector2d next = xk + system.t_c * (system.a * xk) +
                                 system.f * Eigen::Vector2d(s1, s2) +
                                 system.t_c * system.b * uk;
    if (!next.allFinite())
      throw NumericalFailure("simulate_gl: non-finite state at step " +
                             std::to_string(k + 1));
    h1[base - 1] = next[0];
    h2[base - 1] = next[1];
    traj.times[k + 1] = static_cast<double>(k + 1) * system.t_c;
    traj.q1[k + 1] = next[0];
    traj.q2[k + 1] = next[1];
  }
  return traj;
}

}  // namespace fracdose::gl
