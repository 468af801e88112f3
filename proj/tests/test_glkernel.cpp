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
#include <vector>

#include "doctest.h"
#include "fracdose/errors.hpp"
#include "fracdose/specialfn.hpp"
#include "oracles.hpp"

using namespace fracdose;
using oracles::rel_err;

TEST_CASE("gl_coefficients: integer and half order") {
  const auto c1 = gl::gl_coefficients(1.0, 3);
  CHECK(c1.coeffs[0] == 1.0);
  CHECK(c1.coeffs[1] == -1.0);
  CHECK(c1.coeffs[2] == 0.0);
  CHECK(c1.coeffs[3] == 0.0);

  const auto ch = gl::gl_coefficients(0.5, 3);
  CHECK(ch.coeffs[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(ch.coeffs[1] == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(ch.coeffs[2] == doctest::Approx(-0.125).epsilon(1e-15));
  CHECK(ch.coeffs[3] == doctest::Approx(-0.0625).epsilon(1e-15));
  double partial = 0.0;
  for (double c : ch.coeffs) partial += c;
  CHECK(partial == doctest::Approx(0.3125).epsilon(1e-14));
}

TEST_CASE("gl_coefficients: recursion equals the direct product formula") {
  for (double alpha : {0.1, 0.5, 0.9, 1.0}) {
    const std::size_t n = 10000;
    const auto c = gl::gl_coefficients(alpha, n);
    // independently: c_j = (-1)^j prod_{i=0}^{j-1} (alpha - i)/(i + 1)
    for (std::size_t j : {std::size_t{1}, std::size_t{7}, std::size_t{100},
                          std::size_t{999}, std::size_t{10000}}) {
      double prod = 1.0;
      for (std::size_t i = 0; i < j; ++i) prod *= (alpha - i) / (i + 1.0);
      if (j % 2 == 1) prod = -prod;
      CHECK(std::abs(c.coeffs[j] - prod) <=
            1e-14 * std::max(1.0, std::abs(prod)));
    }
  }
}

TEST_CASE("gl_coefficients: signs and partial-sum decay for alpha in (0,1)") {
  const auto c = gl::gl_coefficients(0.5, 2000);
  CHECK(c.coeffs[1] == doctest::Approx(-0.5));
  double partial = c.coeffs[0];
  double prev_partial = partial;
  for (std::size_t j = 1; j <= 2000; ++j) {
    CHECK(c.coeffs[j] < 0.0);
    if (j >= 2) CHECK(c.coeffs[j] > c.coeffs[j - 1]);  // increasing toward 0
    partial += c.coeffs[j];
    CHECK(partial > 0.0);
    CHECK(partial < prev_partial);
    prev_partial = partial;
  }
  CHECK(partial < 0.03);  // tends to (1-1)^alpha = 0
}

TEST_CASE("gl_difference: half derivative of a constant") {
  // f == 1 on [0, 1], h = 0.01: expect lambda / sqrt(pi t) at t = 1
  std::vector<double> f(101, 1.0);
  const double got = gl::gl_difference(f, 0.5, 0.01, 150);
  CHECK(std::abs(got - 0.5641895835477563) < 0.05);
}

TEST_CASE("gl_difference: single sample and identity slope") {
  std::vector<double> one{1.0};
  CHECK(gl::gl_difference(one, 0.5, 1.0, 10) == doctest::Approx(1.0));

  std::vector<double> ramp;
  for (int k = 0; k <= 10; ++k) ramp.push_back(0.1 * k);
  CHECK(gl::gl_difference(ramp, 1.0, 0.1, 10) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gl_difference: input validation") {
  CHECK_THROWS_AS(gl::gl_difference({}, 0.5, 0.1, 10), std::invalid_argument);
  std::vector<double> f{1.0};
  CHECK_THROWS_AS(gl::gl_difference(f, 0.5, 0.0, 10), std::invalid_argument);
}

TEST_CASE("discretize_two_comp: integer-order reduction and dimensions") {
  pk::TwoCompParams p = pk::amiodarone();
  p.alpha = 1.0;
  const auto sys = gl::discretize_two_comp(p, 0.1, 5);
  // alpha = 1: the convolution collapses to a single term, top block
  // I + t_c (A + F)
  CHECK(sys.conv[0] == doctest::Approx(0.1).epsilon(1e-15));
  for (std::size_t j = 1; j < sys.nu; ++j) CHECK(sys.conv[j] == 0.0);
  const Eigen::MatrixXd a_hat = sys.dense();
  Eigen::Matrix2d want =
      Eigen::Matrix2d::Identity() + 0.1 * (sys.a + sys.f);
  CHECK((a_hat.block<2, 2>(0, 0) - want).cwiseAbs().maxCoeff() < 1e-15);

  const auto amio = gl::discretize_two_comp(pk::amiodarone(), 0.01, 500);
  CHECK(amio.dim() == 1000);
  CHECK(amio.dense().rows() == 1000);
  const Eigen::VectorXd b_hat = amio.dense_input();
  CHECK(b_hat(0) == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(b_hat.tail(999).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("simulate_gl: zero state, zero input stays zero") {
  const auto sys = gl::discretize_two_comp(pk::amiodarone(), 0.01, 50);
  const double u0 = 0.0;
  const auto traj = gl::simulate_gl(sys, Eigen::Vector2d::Zero(),
                                    std::span<const double>(&u0, 1), 200);
  for (double v : traj.q1) CHECK(v == 0.0);
  for (double v : traj.q2) CHECK(v == 0.0);
}

TEST_CASE("simulate_gl: block stepping equals the dense augmented matrix") {
  pk::TwoCompParams p = pk::amiodarone();
  const auto sys = gl::discretize_two_comp(p, 0.1, 4);
  std::vector<double> u(20);
  for (std::size_t k = 0; k < u.size(); ++k) u[k] = 0.1 + 0.01 * k;
  const auto traj = gl::simulate_gl(sys, {1.0, 0.25}, u, 20);

  Eigen::MatrixXd a_hat = sys.dense();
  Eigen::VectorXd b_hat = sys.dense_input();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(sys.dim());
  x(0) = 1.0;
  x(1) = 0.25;
  for (std::size_t k = 0; k < 20; ++k) {
    x = a_hat * x + b_hat * u[k];
    CHECK(std::abs(x(0) - traj.q1[k + 1]) < 1e-13);
    CHECK(std::abs(x(1) - traj.q2[k + 1]) < 1e-13);
  }
}

TEST_CASE("simulate_gl: one-compartment bolus against the ML closed form") {
  // k12 = 0 decouples the compartments; k21f acts as elimination of order
  // 1-alpha on q2: q2(t) = E_alpha(-k t^alpha) from q2(0) = 1.
  pk::TwoCompParams p;
  p.k10 = 0.0;
  p.k12 = 0.0;
  p.k21f = 1.0;
  p.alpha = 0.5;
  p.v = 1.0;
  const double h = 1e-3;
  const std::size_t steps = 5000;
  const auto sys = gl::discretize_two_comp(p, h, steps + 1);
  const double u0 = 0.0;
  const auto traj =
      gl::simulate_gl(sys, {0.0, 1.0}, std::span<const double>(&u0, 1), steps);
  double max_rel = 0.0;
  for (std::size_t k = 100; k <= steps; k += 100) {
    const double t = traj.times[k];
    const double want = special::ml1(0.5, -std::sqrt(t)).value;
    max_rel = std::max(max_rel, rel_err(traj.q2[k], want));
  }
  CHECK(max_rel < 1e-2);
}

TEST_CASE("simulate_gl: halving h roughly halves the max error") {
  pk::TwoCompParams p;
  p.k12 = 0.0;
  p.k10 = 0.0;
  p.k21f = 1.0;
  p.alpha = 0.5;
  auto max_err = [&](double h) {
    const std::size_t steps = static_cast<std::size_t>(std::lround(2.0 / h));
    const auto sys = gl::discretize_two_comp(p, h, steps + 1);
    const double u0 = 0.0;
    const auto traj =
        gl::simulate_gl(sys, {0.0, 1.0}, std::span<const double>(&u0, 1), steps);
    double m = 0.0;
    for (std::size_t k = steps / 10; k <= steps; k += steps / 10) {
      const double want = special::ml1(0.5, -std::sqrt(traj.times[k])).value;
      m = std::max(m, std::abs(traj.q2[k] - want));
    }
    return m;
  };
  const double e1 = max_err(4e-3);
  const double e2 = max_err(2e-3);
  CHECK(e2 < e1);
  CHECK(e1 / e2 > 1.4);
  CHECK(e1 / e2 < 3.0);
}

TEST_CASE("simulate_gl: truncation beyond the horizon is inert") {
  pk::TwoCompParams p = pk::amiodarone();
  const std::size_t steps = 300;
  const auto sys_a = gl::discretize_two_comp(p, 0.01, steps);
  const auto sys_b = gl::discretize_two_comp(p, 0.01, steps + 64);
  const double u0 = 0.2;
  const auto ta =
      gl::simulate_gl(sys_a, {1.0, 0.0}, std::span<const double>(&u0, 1), steps);
  const auto tb =
      gl::simulate_gl(sys_b, {1.0, 0.0}, std::span<const double>(&u0, 1), steps);
  for (std::size_t k = 0; k <= steps; ++k) {
    CHECK(ta.q1[k] == tb.q1[k]);
    CHECK(ta.q2[k] == tb.q2[k]);
  }
}

TEST_CASE("simulate_gl: linearity of the trajectory map") {
  const auto sys = gl::discretize_two_comp(pk::amiodarone(), 0.02, 100);
  std::vector<double> u1(150), u2(150), u12(150);
  oracles::Rng rng(7);
  for (std::size_t k = 0; k < u1.size(); ++k) {
    u1[k] = rng.uniform(0.0, 0.4);
    u2[k] = rng.uniform(0.0, 0.4);
    u12[k] = u1[k] + u2[k];
  }
  const Eigen::Vector2d x0(2.0, 0.1);
  const auto t1 = gl::simulate_gl(sys, x0, u1, 150);
  const auto t2 = gl::simulate_gl(sys, Eigen::Vector2d::Zero(), u2, 150);
  const auto t12 = gl::simulate_gl(sys, x0, u12, 150);
  for (std::size_t k = 0; k <= 150; ++k) {
    CHECK(std::abs(t12.q1[k] - (t1.q1[k] + t2.q1[k])) < 1e-12);
    CHECK(std::abs(t12.q2[k] - (t1.q2[k] + t2.q2[k])) < 1e-12);
  }
}

TEST_CASE("simulate_gl: non-negativity for the amiodarone set (regression)") {
  const auto sys = gl::discretize_two_comp(pk::amiodarone(), 0.01, 500);
  const double u0 = 0.3;
  const auto traj = gl::simulate_gl(sys, {4.72, 0.0},
                                    std::span<const double>(&u0, 1), 700);
  for (std::size_t k = 0; k <= 700; ++k) {
    CHECK(traj.q1[k] >= -1e-9);
    CHECK(traj.q2[k] >= -1e-9);
  }
}

TEST_CASE("simulate_gl: non-finite state aborts with diagnostics") {
  pk::TwoCompParams p;
  p.k10 = 1e8;  // forward Euler blows up at this step size
  p.k12 = 0.0;
  p.k21f = 0.0;
  p.alpha = 1.0;
  const auto sys = gl::discretize_two_comp(p, 1.0, 4);
  const double u0 = 0.0;
  CHECK_THROWS_AS(gl::simulate_gl(sys, {1.0, 0.0},
                                  std::span<const double>(&u0, 1), 2000),
                  NumericalFailure);
}

TEST_CASE("mass conservation without elimination (fractional order)") {
  pk::TwoCompParams p = pk::amiodarone();
  p.k10 = 0.0;  // closed system: d(q1+q2)/dt = 0
  const std::size_t steps = 5000;
  const auto sys = gl::discretize_two_comp(p, 1e-3, steps + 1);
  const double u0 = 0.0;
  const auto traj =
      gl::simulate_gl(sys, {4.72, 0.0}, std::span<const double>(&u0, 1), steps);
  for (std::size_t k = 0; k <= steps; k += 250) {
    CHECK(std::abs(traj.q1[k] + traj.q2[k] - 4.72) < 1e-6);
  }
}
