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

#include "fracdose/laplace.hpp"

#include <cmath>
#include <complex>
#include <vector>

#include "doctest.h"
#include "fracdose/errors.hpp"
#include "fracdose/specialfn.hpp"
#include "oracles.hpp"

using namespace fracdose;
using namespace fracdose::laplace;
using oracles::rel_err;
using cplx = std::complex<double>;

TEST_CASE("canonicalize: sorting, merging, shifting") {
  FracTransferFunction f;
  f.num = {{1.0, 0.5}, {2.0, 0.5}, {1.0, 2.0}};
  f.den = {{1.0, -0.4}, {3.0, 1.0}};
  f.canonicalize();
  // duplicates merged, descending order
  CHECK(f.num.size() == 2);
  CHECK(f.num[0].exponent > f.num[1].exponent);
  CHECK(f.num[1].coef == 3.0);
  // common shift by s^{0.4} makes every exponent >= 0
  for (const auto& t : f.num) CHECK(t.exponent >= 0.0);
  for (const auto& t : f.den) CHECK(t.exponent >= 0.0);
  CHECK(f.den[1].exponent == doctest::Approx(0.0));

  FracTransferFunction bad;
  bad.num = {{1.0, 0.0}};
  bad.den = {{0.0, 1.0}};
  CHECK_THROWS_AS(bad.canonicalize(), std::invalid_argument);
}

TEST_CASE("tf_eval: basic values and scaling") {
  FracTransferFunction inv_s;
  inv_s.num = {{1.0, 0.0}};
  inv_s.den = {{1.0, 1.0}};
  CHECK(tf_eval(inv_s, {2.0, 0.0}).real() == doctest::Approx(0.5));

  FracTransferFunction f;  // 1/(s + sqrt(s))
  f.num = {{1.0, 0.0}};
  f.den = {{1.0, 1.0}, {1.0, 0.5}};
  CHECK(tf_eval(f, {1.0, 0.0}).real() == doctest::Approx(0.5).epsilon(1e-14));

  // scaling: eval(c f) = c eval(f)
  FracTransferFunction g = f;
  for (auto& t : g.num) t.coef *= 3.5;
  const cplx s{0.3, 0.7};
  CHECK(std::abs(tf_eval(g, s) - 3.5 * tf_eval(f, s)) < 1e-14);

  CHECK_THROWS_AS(tf_eval(inv_s, {0.0, 0.0}), PoleError);
}

TEST_CASE("nilt: step function and the worked half-order example") {
  FracTransferFunction inv_s;
  inv_s.num = {{1.0, 0.0}};
  inv_s.den = {{1.0, 1.0}};
  std::vector<double> ts{0.5, 1.0, 3.0};
  const auto r = nilt(inv_s, ts);
  for (double v : r.values) CHECK(std::abs(v - 1.0) < 1e-8);

  FracTransferFunction f;  // 1/(s + sqrt(s)) <-> e^t erfc(sqrt(t))
  f.num = {{1.0, 0.0}};
  f.den = {{1.0, 1.0}, {1.0, 0.5}};
  std::vector<double> tw{0.1, 0.5, 1.0, 2.0, 5.0};
  const auto w = nilt(f, tw);
  CHECK_FALSE(w.accel_fallback);
  for (std::size_t i = 0; i < tw.size(); ++i) {
    const double want =
        std::exp(tw[i]) * oracles::erfc(std::sqrt(tw[i]));
    CHECK(std::abs(w.values[i] - want) < 1e-6);
  }
}

TEST_CASE("nilt: two-parameter Mittag-Leffler pair") {
  // s^{a-2}/(s^a + k) <-> t E_{a,2}(-k t^a), a = 0.5, k = 1
  FracTransferFunction f;
  f.num = {{1.0, 0.5 - 2.0}};
  f.den = {{1.0, 0.5}, {1.0, 0.0}};
  f.canonicalize();
  std::vector<double> ts{1.0};
  const auto r = nilt(f, ts);
  const double want = special::ml2(0.5, 2.0, -1.0).value;  // = 0.5559627432513196
  CHECK(std::abs(r.values[0] - want) < 1e-6);
}

TEST_CASE("nilt: round trip on random stable rational transfer functions") {
  oracles::Rng rng(123);
  for (int rep = 0; rep < 20; ++rep) {
    double p[3], res[3];
    for (int i = 0; i < 3; ++i) {
      p[i] = -rng.uniform(0.2, 5.0);
      res[i] = rng.uniform(-2.0, 2.0);
    }
    // F(s) = sum res_i/(s - p_i) assembled over the common cubic denominator
    // den = (s-p0)(s-p1)(s-p2)
    const double d2 = -(p[0] + p[1] + p[2]);
    const double d1 = p[0] * p[1] + p[0] * p[2] + p[1] * p[2];
    const double d0 = -p[0] * p[1] * p[2];
    FracTransferFunction f;
    f.den = {{1.0, 3.0}, {d2, 2.0}, {d1, 1.0}, {d0, 0.0}};
    double n2 = res[0] + res[1] + res[2];
    double n1 = -(res[0] * (p[1] + p[2]) + res[1] * (p[0] + p[2]) +
                  res[2] * (p[0] + p[1]));
    double n0 = res[0] * p[1] * p[2] + res[1] * p[0] * p[2] + res[2] * p[0] * p[1];
    f.num = {{n2, 2.0}, {n1, 1.0}, {n0, 0.0}};
    f.canonicalize();

    std::vector<double> ts{0.1, 0.3, 1.0, 3.0, 10.0};
    const auto r = nilt(f, ts);
    for (std::size_t i = 0; i < ts.size(); ++i) {
      double want = 0.0;
      for (int j = 0; j < 3; ++j) want += res[j] * std::exp(p[j] * ts[i]);
      CHECK(std::abs(r.values[i] - want) < 1e-6);
    }
  }
}

TEST_CASE("nilt: QD breakdown falls back to Euler acceleration") {
  // constant transform: every Fourier coefficient equal, QD table divides 0/0
  const auto r = nilt([](cplx) { return cplx{1.0, 0.0}; },
                      std::vector<double>{1.0});
  CHECK(r.accel_fallback);
}

TEST_CASE("nilt: input validation") {
  FracTransferFunction inv_s;
  inv_s.num = {{1.0, 0.0}};
  inv_s.den = {{1.0, 1.0}};
  CHECK_THROWS_AS(nilt(inv_s, std::vector<double>{-1.0}), std::invalid_argument);
  CHECK_THROWS_AS(nilt(inv_s, std::vector<double>{2.0, 1.0}), std::invalid_argument);
}

TEST_CASE("oustaloup: gain condition and design formulas") {
  for (double alpha : {0.3, 0.5, 0.7}) {
    const RationalTf tf = oustaloup(alpha, 1e-2, 1e2, 4);
    const double wu = 1.0;
    CHECK(rel_err(std::abs(tf.eval({0.0, wu})), std::pow(wu, alpha)) < 1e-6);
    CHECK(tf.zeros.size() == 9);
    CHECK(tf.poles.size() == 9);
  }
  // printed design value: N=1, alpha=0.5, band [0.1, 10]
  const RationalTf tf = oustaloup(0.5, 0.1, 10.0, 1);
  CHECK(tf.poles[0] == doctest::Approx(0.31622776601683794).epsilon(1e-12));
}

TEST_CASE("oustaloup: pole/zero interlacing") {
  const RationalTf tf = oustaloup(0.5, 1e-2, 1e2, 4);
  for (std::size_t k = 0; k < tf.zeros.size(); ++k) {
    CHECK(tf.zeros[k] < tf.poles[k]);
    if (k + 1 < tf.zeros.size()) CHECK(tf.poles[k] < tf.zeros[k + 1]);
  }
  for (double p : tf.poles) CHECK(p > 0.0);  // strictly stable approximant
}

TEST_CASE("oustaloup: Bode slope and band-edge degradation") {
  const double alpha = 0.5;
  const RationalTf tf = oustaloup(alpha, 1e-2, 1e2, 4);
  // log-slope regression over [10 wb, wh/10]
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int n = 60;
  for (int i = 0; i < n; ++i) {
    const double w = 0.1 * std::pow(1e2, i / (n - 1.0));
    const double x = std::log10(w);
    const double y = std::log10(std::abs(tf.eval({0.0, w})));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(std::abs(slope - alpha) < 0.05);

  auto band_err = [&](double w) {
    return std::abs(std::abs(tf.eval({0.0, w})) / std::pow(w, alpha) - 1.0);
  };
  CHECK(band_err(1.0) <= band_err(0.1) + 1e-12);
  CHECK(band_err(0.1) <= band_err(0.01) + 1e-12);
}

TEST_CASE("oustaloup: input validation") {
  CHECK_THROWS_AS(oustaloup(0.0, 1e-2, 1e2, 4), std::invalid_argument);
  CHECK_THROWS_AS(oustaloup(0.5, 1.0, 0.1, 4), std::invalid_argument);
  CHECK_THROWS_AS(oustaloup(0.5, 1e-2, 1e2, 0), std::invalid_argument);
}

TEST_CASE("matsuda_fujii: constant data degenerates gracefully") {
  std::vector<std::pair<double, double>> samples;
  for (int i = 0; i < 7; ++i) samples.push_back({std::pow(10.0, -2 + i * 0.5), 3.0});
  const MatsudaModel m = matsuda_fujii(samples, 6);
  CHECK(m.alphas[0] == doctest::Approx(3.0));
  CHECK(m.eval(0.7) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(m.eval(42.0) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("matsuda_fujii: interpolates s^0.5 on log-spaced nodes") {
  std::vector<std::pair<double, double>> samples;
  const int n_nodes = 9;
  for (int i = 0; i < n_nodes; ++i) {
    const double s = std::pow(10.0, -2.0 + 4.0 * i / (n_nodes - 1.0));
    samples.push_back({s, std::sqrt(s)});
  }
  const MatsudaModel m = matsuda_fujii(samples, n_nodes - 1);
  // interpolation residual at the nodes
  for (const auto& [s, v] : samples) CHECK(rel_err(m.eval(s), v) < 1e-10);
  // dense-grid relative error on the node hull
  double worst = 0.0;
  for (int i = 0; i <= 200; ++i) {
    const double s = std::pow(10.0, -2.0 + 4.0 * i / 200.0);
    worst = std::max(worst, rel_err(m.eval(s), std::sqrt(s)));
  }
  CHECK(worst < 0.02);
}

TEST_CASE("matsuda_fujii: depth validation") {
  std::vector<std::pair<double, double>> samples{{1.0, 1.0}, {2.0, 1.4}};
  CHECK_THROWS_AS(matsuda_fujii(samples, 5), std::invalid_argument);
}

TEST_CASE("pade_s_alpha: edge orders and local accuracy") {
  const RationalTf c = pade_s_alpha(0.5, 2.0, 0, 0);
  CHECK(c.gain == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(c.zeros.empty());
  CHECK(c.poles.empty());

  const RationalTf tf = pade_s_alpha(0.5, 1.0, 2, 2);
  CHECK_FALSE(tf.reduced);
  CHECK(rel_err(std::abs(tf.eval({1.0, 0.0})), 1.0) < 1e-12);  // exact at s0
  double worst = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double s = 0.5 + 1.5 * i / 100.0;
    worst = std::max(worst, rel_err(tf.eval({s, 0.0}).real(), std::sqrt(s)));
  }
  CHECK(worst < 0.01);
  for (double p : tf.poles) CHECK(p > 0.0);  // stable corner frequencies
  for (double z : tf.zeros) CHECK(z > 0.0);
}
