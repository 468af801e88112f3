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

// Test-only reference implementations, kept independent of the library code
// paths they are used to check.

#ifndef FRACDOSE_TESTS_ORACLES_HPP
#define FRACDOSE_TESTS_ORACLES_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace oracles {

// erfc by Maclaurin series (|x| < 3) and Lentz continued fraction (x >= 3).
inline double erfc(double x);

// e^{x^2} erfc(x) for x >= 0 without overflow (continued fraction directly).
inline double scaled_erfc(double x) {
  const double sqrt_pi = 1.7724538509055160273;
  if (x < 3.0) return std::exp(x * x) * erfc(x);
  // erfc(x) = e^{-x^2}/sqrt(pi) * 1/(x + (1/2)/(x + (2/2)/(x + (3/2)/(x + ...))))
  double f = x;
  for (int k = 60; k >= 1; --k) f = x + (0.5 * k) / f;
  return 1.0 / (sqrt_pi * f);
}

inline double erfc(double x) {
  if (x < 0) return 2.0 - erfc(-x);
  if (x >= 3.0) return std::exp(-x * x) * scaled_erfc(x);
  // erf(x) = 2/sqrt(pi) sum (-1)^n x^{2n+1} / (n! (2n+1))
  const double two_over_sqrt_pi = 1.1283791670955125739;
  double term = x;
  double sum = x;
  for (int n = 1; n < 200; ++n) {
    term *= -x * x / n;
    sum += term / (2 * n + 1);
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
  }
  return 1.0 - two_over_sqrt_pi * sum;
}

// E_{1/2}(-x) = e^{x^2} erfc(x) for x >= 0 (classical identity).
inline double ml_half_negative(double x) { return scaled_erfc(x); }

// Matrix exponential by scaling-and-squaring on the Taylor series.
inline Eigen::MatrixXd expm(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  int squarings = 0;
  double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  while (norm > 0.5) {
    norm *= 0.5;
    ++squarings;
  }
  const Eigen::MatrixXd as = a / std::pow(2.0, squarings);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd sum = term;
  for (int k = 1; k <= 24; ++k) {
    term = term * as / k;
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

// Deterministic RNG for property tests.
struct Rng {
  std::uint64_t state;
  explicit Rng(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform(double lo, double hi) {
    const double u =
        (static_cast<double>(next() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    return lo + (hi - lo) * u;
  }
};

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

}  // namespace oracles

#endif  // FRACDOSE_TESTS_ORACLES_HPP
