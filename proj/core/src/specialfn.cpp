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

#include "fracdose/specialfn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "fracdose/errors.hpp"

namespace fracdose::special {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kSeriesCap = 2000;
constexpr double kSeriesTol = 1e-14;
constexpr int kAsymptoticCap = 10;

// Lanczos coefficients, g = 7, n = 9 (Godfrey's table, ~15 digits).
constexpr double kLanczosG = 7.0;
constexpr double kLanczos[9] = {
    0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
    771.32342877765313,   -176.61502916214059,   12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};

bool is_nonpositive_integer(double x) {
  return x <= 0.5 && std::abs(x - std::round(x)) < 1e-12 * std::max(1.0, std::abs(x));
}

// Lanczos kernel, valid for x >= 0.5.
double gamma_positive(double x) {
  const double z = x - 1.0;
  double acc = kLanczos[0];
  for (int i = 1; i < 9; ++i) acc += kLanczos[i] / (z + i);
  const double t = z + kLanczosG + 0.5;
  if (x > 100.0) {
    // t^{z+0.5} alone overflows near x ~ 143; split the power
    const double r = std::pow(t, 0.5 * (z + 0.5));
    return std::sqrt(2.0 * kPi) * acc * r * std::exp(-t) * r;
  }
  return std::sqrt(2.0 * kPi) * std::pow(t, z + 0.5) * std::exp(-t) * acc;
}

double lgamma_positive(double x) {
  const double z = x - 1.0;
  double acc = kLanczos[0];
  for (int i = 1; i < 9; ++i) acc += kLanczos[i] / (z + i);
  const double t = z + kLanczosG + 0.5;
  return 0.5 * std::log(2.0 * kPi) + (z + 0.5) * std::log(t) - t + std::log(acc);
}

// sin(pi x) with the argument reduced modulo 1; exact zeros at integers.
double sin_pi(double x) {
  const double fl = std::floor(x);
  double frac = x - fl;
  double s;
  if (frac > 0.5)
    s = -std::sin(kPi * (frac - 1.0));
  else
    s = std::sin(kPi * frac);
  return (static_cast<std::int64_t>(fl) % 2 == 0) ? s : -s;
}

}  // namespace

double gamma_real(double x) {
  if (std::isnan(x)) throw PoleError("gamma_real: NaN argument");
  if (is_nonpositive_integer(x))
    throw PoleError("gamma_real: pole at x = " + std::to_string(x));
  if (x > 171.63)
    throw OverflowError("gamma_real: overflow at x = " + std::to_string(x));
  if (x >= 0.5) return gamma_positive(x);
  // Reflection: Gamma(x) = pi / (sin(pi x) Gamma(1 - x)).
  const double g1mx = gamma_positive(1.0 - x);
  if (std::isinf(g1mx)) return 0.0;  // |Gamma| underflows for very negative x
  return kPi / (sin_pi(x) * g1mx);
}

double lgamma_real(double x) {
  if (!(x > 0.0)) throw PoleError("lgamma_real: requires x > 0");
  return lgamma_positive(x);
}

double reciprocal_gamma(double x) {
  if (is_nonpositive_integer(x)) return 0.0;
  if (x >= 0.5) {
    if (x > 171.63) return 0.0;
    return 1.0 / gamma_positive(x);
  }
  return sin_pi(x) * gamma_positive(1.0 - x) / kPi;
}

double series_switch_radius(double alpha) {
  // The alternating series peaks near exp(|z|^{1/alpha}). Round-off of each
  // term accumulates over the run of the sum, so the usable budget is about
  // peak * terms * eps; capping the peak at ~e^19 keeps ~5 correct digits.
  return std::min(15.0, std::pow(19.0, alpha));
}

namespace {

// Direct Prabhakar Taylor series, term_k = (rho)_k z^k / (k! Gamma(a k + b)).
// The prefactor (rho)_k |z|^k / k! is tracked in logs so large positive z and
// large Gamma arguments cannot overflow mid-sum.
EvalResult ml3_series(double alpha, double beta, double rho, double z) {
  EvalResult r;
  double sum = 0.0;
  double max_abs = 0.0;
  double prev_abs = std::numeric_limits<double>::infinity();
  double next_abs = 0.0;
  double log_pref = 0.0;  // log |(rho)_k z^k / k!|
  double sign = 1.0;
  const double log_az = std::log(std::abs(z));
  int k = 0;
  for (k = 0; k < kSeriesCap; ++k) {
    const double g = alpha * k + beta;
    double term;
    if (g >= 0.5) {
      term = sign * std::exp(log_pref - lgamma_positive(g));
    } else {
      term = sign * std::exp(log_pref) * reciprocal_gamma(g);
    }
    if (std::isnan(term))
      throw NonConvergenceError("ml3: series term is NaN");
    sum += term;
    const double ta = std::abs(term);
    max_abs = std::max(max_abs, ta);
    // prefactor for k+1
    log_pref += log_az + std::log(std::abs(rho + k)) - std::log(k + 1.0);
    if (z < 0) sign = -sign;
    if (rho + k < 0) sign = -sign;
    const double g_next = alpha * (k + 1) + beta;
    next_abs = (g_next >= 0.5)
                   ? std::exp(log_pref - lgamma_positive(g_next))
                   : std::exp(log_pref) * std::abs(reciprocal_gamma(g_next));
    if (k > 2 && ta <= prev_abs && next_abs < kSeriesTol * std::abs(sum) + 1e-300) {
      ++k;
      break;
    }
    if (ta > 0) prev_abs = ta;
  }
  if (!std::isfinite(sum)) throw OverflowError("ml3: series overflow");
  r.value = sum;
  r.terms_used = k + 1;
  // round-off accumulates roughly linearly in the number of summed terms
  r.abs_error_estimate =
      std::max(next_abs, max_abs * kEps * std::max(1.0, (k + 1) / 3.0));
  return r;
}

// alpha == 1 via the Kummer transformation:
//   E^rho_{1,b}(z) = M(rho,b,z)/Gamma(b) = e^z M(b-rho,b,-z)/Gamma(b).
// For z < 0 the transformed argument is positive and the terms settle into a
// fixed sign once k > rho - b, so the sum is cancellation-free.
EvalResult ml3_kummer(double beta, double rho, double z) {
  EvalResult r;
  const double a = beta - rho;
  const double w = -z;
  double term = 1.0;
  double sum = 1.0;
  int k = 0;
  for (k = 0; k < 8 * kSeriesCap; ++k) {
    term *= (a + k) * w / ((beta + k) * (k + 1.0));
    sum += term;
    if (k > 3 && std::abs(term) < 1e-17 * std::abs(sum) + 1e-300) {
      ++k;
      break;
    }
  }
  double value;
  if (beta > 0.5 && beta <= 170.0) {
    value = std::exp(z) * sum / gamma_positive(beta);
  } else if (beta > 170.0) {
    value = (sum == 0.0) ? 0.0
                         : std::copysign(std::exp(z + std::log(std::abs(sum)) -
                                                  lgamma_positive(beta)),
                                         sum);
  } else {
    value = std::exp(z) * sum * reciprocal_gamma(beta);
  }
  r.value = value;
  r.terms_used = k + 1;
  r.abs_error_estimate = std::max(std::abs(value) * 8.0 * kEps, 1e-300);
  return r;
}

// Prabhakar asymptotic expansion for z -> -inf (x = -z):
//   E^rho_{a,b}(-x) = x^{-rho}/Gamma(rho) *
//       sum_j (-1)^j Gamma(rho+j)/(j! Gamma(b - a(rho+j))) x^{-j}.
// rho = 1 reduces to -sum_k z^{-k}/Gamma(b - a k). The series is divergent;
// terms are accumulated while they shrink (optimal truncation), j < p_cap.
EvalResult ml3_asymptotic(double alpha, double beta, double rho, double z, int p_cap) {
  EvalResult r;
  const double x = -z;
  const double log_lead = -rho * std::log(x) - lgamma_positive(rho);
  double sum = 0.0;
  double prev_abs = std::numeric_limits<double>::infinity();
  double omitted = 0.0;
  int used = 0;
  for (int j = 0; j < p_cap; ++j) {
    const double g = beta - alpha * (rho + j);
    const double coef =
        std::exp(lgamma_positive(rho + j) - lgamma_positive(j + 1.0) - j * std::log(x));
    const double t = ((j % 2 == 0) ? 1.0 : -1.0) * coef * reciprocal_gamma(g);
    const double ta = std::abs(t);
    if (j > 1 && ta > prev_abs) {
      omitted = ta;
      break;
    }
    sum += t;
    if (ta > 0) prev_abs = ta;
    used = j + 1;
    omitted = std::exp(lgamma_positive(rho + j + 1.0) - lgamma_positive(j + 2.0) -
                       (j + 1.0) * std::log(x)) *
              std::abs(reciprocal_gamma(beta - alpha * (rho + j + 1)));
  }
  const double lead = std::exp(log_lead);
  r.value = lead * sum;
  r.terms_used = std::max(used, 1);
  r.abs_error_estimate = lead * std::max(omitted, std::abs(sum) * kEps);
  return r;
}

}  // namespace

EvalResult ml3(const MlParams& params, double z) {
  const double alpha = params.alpha;
  const double beta = params.beta;
  const double rho = params.rho;
  if (!(alpha > 0.0)) throw RegimeError("ml3: requires alpha > 0");
  if (!std::isfinite(beta)) throw RegimeError("ml3: beta must be finite");
  if (!(rho > 0.0)) throw RegimeError("ml3: requires rho > 0");

  if (z == 0.0) {
    EvalResult r;
    r.value = reciprocal_gamma(beta);
    r.abs_error_estimate = std::abs(r.value) * kEps;
    r.terms_used = 1;
    return r;
  }
  if (alpha == 1.0 && z < 0.0) return ml3_kummer(beta, rho, z);
  if (z > 0.0 || std::abs(z) <= series_switch_radius(alpha))
    return ml3_series(alpha, beta, rho, z);

  EvalResult asym = ml3_asymptotic(alpha, beta, rho, z, kAsymptoticCap);
  if (asym.abs_error_estimate > std::max(std::abs(asym.value), 1e-12))
    throw NonConvergenceError(
        "ml3: neither series nor asymptotic regime attains tolerance at z = " +
        std::to_string(z));
  return asym;
}

EvalResult ml2(double alpha, double beta, double z) {
  return ml3(MlParams{alpha, beta, 1.0}, z);
}

EvalResult ml1(double alpha, double z) { return ml2(alpha, 1.0, z); }

EvalResult ml2_asymptotic(double mu, double nu, double z, int p) {
  if (!(mu > 0.0)) throw RegimeError("ml2_asymptotic: requires mu > 0");
  if (p < 1) throw RegimeError("ml2_asymptotic: requires p >= 1");
  // The automatic evaluator switches at series_switch_radius; an explicit-p
  // call is honoured for any |z| where an expansion in 1/z makes sense at all.
  if (!(z < 0.0) || std::abs(z) <= 1.0)
    throw RegimeError("ml2_asymptotic: |z| below the asymptotic regime");
  EvalResult r;
  double sum = 0.0;
  for (int k = 1; k <= p; ++k) sum -= std::pow(z, -k) * reciprocal_gamma(nu - mu * k);
  r.value = sum;
  r.terms_used = p;
  double tail = 0.0;
  for (int k = p + 1; k <= p + 3; ++k)
    tail = std::max(tail, std::pow(std::abs(z), static_cast<double>(-k)) *
                              std::abs(reciprocal_gamma(nu - mu * k)));
  r.abs_error_estimate = std::max(tail, std::abs(sum) * kEps);
  return r;
}

}  // namespace fracdose::special
