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

#ifndef FRACDOSE_SPECIALFN_HPP
#define FRACDOSE_SPECIALFN_HPP

#include <cstdint>

namespace fracdose::special {

// Parameters of the three-parameter (Prabhakar) Mittag-Leffler function
//   E^rho_{alpha,beta}(z) = sum_k (rho)_k z^k / (k! Gamma(alpha k + beta)).
// rho = 1 gives the two-parameter function, rho = beta = 1 the classical one.
struct MlParams {
  double alpha;
  double beta = 1.0;
  double rho = 1.0;
};

struct EvalResult {
  double value = 0.0;
  double abs_error_estimate = 0.0;
  int terms_used = 1;
};

// Euler gamma function for real x, Lanczos approximation (g=7, 9 coefficients)
// with the reflection formula for x < 0.5. Throws PoleError at non-positive
// integers and OverflowError once the result exceeds double range (~x > 171.6).
double gamma_real(double x);

// log |Gamma(x)| for x > 0. Companion to gamma_real, same Lanczos kernel.
double lgamma_real(double x);

// 1/Gamma(x) as an entire function: returns 0 at the poles of Gamma.
double reciprocal_gamma(double x);

// One-, two- and three-parameter Mittag-Leffler functions on the real line.
// Evaluation strategy (same code path, ml1/ml2 forward to ml3):
//  - alpha == 1, z < 0: Kummer-transformed confluent series, stable for any |z|
//  - |z| <= series_switch_radius(alpha) or z > 0: Taylor series, stop when the
//    next term < 1e-14 * |sum| (cap 2000 terms); the error estimate carries the
//    first omitted term plus the round-off floor eps * max |term|
//  - z < 0 beyond the radius: algebraic asymptotic expansion, p adaptive <= 10
// Throws NonConvergenceError when no regime attains a usable estimate.
EvalResult ml1(double alpha, double z);
EvalResult ml2(double alpha, double beta, double z);
EvalResult ml3(const MlParams& params, double z);

// Asymptotic expansion of E_{mu,nu}(z) for z -> -inf:
//   -sum_{k=1}^{p} z^{-k} / Gamma(nu - mu k),
// error O(|z|^{-(p+1)}). Terms whose Gamma argument hits a pole contribute 0.
// Throws RegimeError if |z| is below the series/asymptotic switch radius.
EvalResult ml2_asymptotic(double mu, double nu, double z, int p);

// Largest |z| (z < 0) for which the alternating Taylor series still carries
// ~12 correct digits in doubles; the cancellation peak grows like
// exp(|z|^(1/alpha)).
double series_switch_radius(double alpha);

}  // namespace fracdose::special

#endif  // FRACDOSE_SPECIALFN_HPP
