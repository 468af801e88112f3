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

#ifndef FRACDOSE_LAPLACE_HPP
#define FRACDOSE_LAPLACE_HPP

#include <complex>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace fracdose::laplace {

// Quotient of generalized polynomials sum_i a_i s^{g_i} with real exponents.
struct Term {
  double coef = 0.0;
  double exponent = 0.0;
};

struct FracTransferFunction {
  std::vector<Term> num;
  std::vector<Term> den;
  std::string description;

  // Sorts by descending exponent, merges duplicates, drops zero coefficients,
  // and shifts num/den by a common power of s so all exponents are >= 0.
  void canonicalize();
};

std::complex<double> tf_eval(const FracTransferFunction& f, std::complex<double> s);

struct NiltResult {
  std::vector<double> values;
  std::vector<double> error_estimates;
  bool accel_fallback = false;  // QD breakdown, plain Euler acceleration used
};

// De Hoog / Knight / Stokes Fourier-series inversion with quotient-difference
// acceleration. Time points are grouped into blocks with bounded t_max/t_min;
// each block gets its own contour with scaled period T = 2 max(t) and shift
// sigma = sigma0 + sigma_margin (sigma_margin < 0 requests the default
// ln(1e10)/(2T)). 2M+1 transform evaluations per block.
NiltResult nilt(const std::function<std::complex<double>(std::complex<double>)>& f,
                std::span<const double> t_points, int m_terms = 40,
                double sigma0 = 0.0, double sigma_margin = -1.0);

NiltResult nilt(const FracTransferFunction& f, std::span<const double> t_points,
                int m_terms = 40, double sigma0 = 0.0, double sigma_margin = -1.0);

// Stable rational approximant of s^alpha: gain * prod (s + zeros) / (s + poles)
// (zeros/poles are the positive corner frequencies; actual roots are their
// negatives).
struct RationalTf {
  std::vector<double> zeros;
  std::vector<double> poles;
  double gain = 1.0;
  bool reduced = false;  // set when a singular Pade system forced a lower order

  std::complex<double> eval(std::complex<double> s) const;
};

// Oustaloup recursive approximation of s^alpha on [wb, wh] with 2N+1 cells.
// Corner frequencies per the recursive design formulas; the gain is fixed by
// the condition |H(j wu)| = wu^alpha at wu = sqrt(wb wh), which works out to
// wh^alpha exactly.
RationalTf oustaloup(double alpha, double wb, double wh, int n_half);

// Matsuda-Fujii continued-fraction interpolation of sampled frequency data.
struct MatsudaModel {
  std::vector<double> nodes;   // s_0 .. s_{d}
  std::vector<double> alphas;  // a_0 .. a_{d}
  double eval(double s) const;
  std::complex<double> eval(std::complex<double> s) const;
};

MatsudaModel matsuda_fujii(std::span<const std::pair<double, double>> f_samples,
                           int depth);

// [m/n] Pade approximant of s^alpha developed at s0 > 0, returned in stable
// zero/pole/gain form.
RationalTf pade_s_alpha(double alpha, double s0, int m, int n);

}  // namespace fracdose::laplace

#endif  // FRACDOSE_LAPLACE_HPP
