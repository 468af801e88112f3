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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "fracdose/errors.hpp"

namespace fracdose::laplace {

using cplx = std::complex<double>;

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kBlockRatio = 6.0;  // max t_max/t_min sharing one contour
}  // namespace

void FracTransferFunction::canonicalize() {
  auto tidy = [](std::vector<Term>& terms) {
    std::sort(terms.begin(), terms.end(),
              [](const Term& a, const Term& b) { return a.exponent > b.exponent; });
    std::vector<Term> merged;
    for (const Term& t : terms) {
      if (!merged.empty() && std::abs(merged.back().exponent - t.exponent) < 1e-12)
        merged.back().coef += t.coef;
      else
        merged.push_back(t);
    }
    merged.erase(std::remove_if(merged.begin(), merged.end(),
                                [](const Term& t) { return t.coef == 0.0; }),
                 merged.end());
    return merged;
  };
  num = tidy(num);
  den = tidy(den);
  if (den.empty())
    throw std::invalid_argument("FracTransferFunction: denominator is identically zero");
  double min_exp = 0.0;
  for (const Term& t : num) min_exp = std::min(min_exp, t.exponent);
  for (const Term& t : den) min_exp = std::min(min_exp, t.exponent);
  if (min_exp < 0.0) {
    for (Term& t : num) t.exponent -= min_exp;
    for (Term& t : den) t.exponent -= min_exp;
  }
}

std::complex<double> tf_eval(const FracTransferFunction& f, cplx s) {
  auto poly = [&s](const std::vector<Term>& terms) {
    cplx acc{0.0, 0.0};
    for (const Term& t : terms) {
      if (t.exponent == 0.0)
        acc += t.coef;
      else
        acc += t.coef * std::pow(s, t.exponent);  // principal branch
    }
    return acc;
  };
  const cplx d = poly(f.den);
  if (std::abs(d) < 1e-300)
    throw PoleError("tf_eval: denominator vanishes at the requested point");
  return poly(f.num) / d;
}

namespace {

struct DeHoogTable {
  std::vector<cplx> d;  // continued-fraction coefficients, size 2M+1
  double sigma = 0.0;
  double period = 0.0;
  bool breakdown = false;
  std::vector<cplx> a;  // raw Fourier coefficients (a[0] already halved)
};

DeHoogTable dehoog_prepare(const std::function<cplx(cplx)>& f, double t_max, int m,
                           double sigma0, double sigma_margin) {
  DeHoogTable tab;
  tab.period = 2.0 * t_max;
  const double margin =
      sigma_margin < 0.0 ? std::log(1e10) / (2.0 * tab.period) : sigma_margin;
  tab.sigma = sigma0 + margin;

  const int n = 2 * m;
  tab.a.resize(n + 1);
  for (int k = 0; k <= n; ++k)
    tab.a[k] = f(cplx(tab.sigma, k * kPi / tab.period));
  tab.a[0] *= 0.5;

  // Quotient-difference scheme, De Hoog et al. (1982), eqn 20.
  Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(n + 2, m + 1);
  Eigen::MatrixXcd q = Eigen::MatrixXcd::Zero(n + 2, m + 1);
  for (int i = 0; i < n; ++i) {
    if (std::abs(tab.a[i]) < 1e-300) {
      tab.breakdown = true;
      return tab;
    }
    q(i, 1) = tab.a[i + 1] / tab.a[i];
  }
  for (int r = 1; r <= m; ++r) {
    if (r >= 2) {
      for (int i = 0; i <= 2 * (m - r) + 1; ++i) {
        const cplx denom = e(i, r - 1);
        if (std::abs(denom) < 1e-300) {
          tab.breakdown = true;
          return tab;
        }
        q(i, r) = q(i + 1, r - 1) * e(i + 1, r - 1) / denom;
      }
    }
    for (int i = 0; i <= 2 * (m - r); ++i)
      e(i, r) = q(i + 1, r) - q(i, r) + e(i + 1, r - 1);
  }
  tab.d.resize(n + 1);
  tab.d[0] = tab.a[0];
  for (int r = 1; r <= m; ++r) {
    tab.d[2 * r - 1] = -q(0, r);
    tab.d[2 * r] = -e(0, r);
  }
  for (const cplx& v : tab.d)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      tab.breakdown = true;
      return tab;
    }
  return tab;
}

// Continued-fraction evaluation with the remainder modification (eqns 21-24).
// Returns the accelerated value and the plain (no-remainder) value used for
// the self-reported error estimate.
std::pair<double, double> dehoog_eval(const DeHoogTable& tab, int m, double t) {
  const int n = 2 * m;
  const cplx z = std::polar(1.0, kPi * t / tab.period);
  std::vector<cplx> A(n + 2), B(n + 2);
  A[0] = 0.0;
  B[0] = 1.0;
  A[1] = tab.d[0];
  B[1] = 1.0;
  for (int k = 2; k <= n + 1; ++k) {
    A[k] = A[k - 1] + tab.d[k - 1] * z * A[k - 2];
    B[k] = B[k - 1] + tab.d[k - 1] * z * B[k - 2];
  }
  const double scale = std::exp(tab.sigma * t) / tab.period;
  const double plain = scale * (A[n + 1] / B[n + 1]).real();
  const cplx h2m = 0.5 * (1.0 + z * (tab.d[n - 1] - tab.d[n]));
  const cplx r2m = -h2m * (1.0 - std::sqrt(1.0 + z * tab.d[n] / (h2m * h2m)));
  const cplx a_acc = A[n] + r2m * A[n - 1];
  const cplx b_acc = B[n] + r2m * B[n - 1];
  if (std::abs(b_acc) < 1e-300) return {plain, plain};
  const double accel = scale * (a_acc / b_acc).real();
  return {accel, plain};
}

// Euler-accelerated partial sums of the Fourier series; fallback when the QD
// table breaks down (e.g. a constant transform).
std::pair<double, double> euler_eval(const DeHoogTable& tab, int m, double t) {
  const int n = 2 * m;
  const cplx z = std::polar(1.0, kPi * t / tab.period);
  std::vector<double> partial(n + 1);
  cplx zk{1.0, 0.0};
  cplx acc{0.0, 0.0};
  for (int k = 0; k <= n; ++k) {
    acc += tab.a[k] * zk;
    partial[k] = acc.real();
    zk *= z;
  }
  // Binomial average of the last m+1 partial sums.
  double w = 1.0;
  double wsum = 0.0;
  double esum = 0.0;
  for (int j = 0; j <= m; ++j) {
    esum += w * partial[n - m + j];
    wsum += w;
    w *= static_cast<double>(m - j) / (j + 1.0);
  }
  const double scale = std::exp(tab.sigma * t) / tab.period;
  return {scale * esum / wsum, scale * partial[n]};
}

}  // namespace

NiltResult nilt(const std::function<cplx(cplx)>& f, std::span<const double> t_points,
                int m_terms, double sigma0, double sigma_margin) {
  if (t_points.empty()) return {};
  for (std::size_t i = 0; i < t_points.size(); ++i) {
    if (!(t_points[i] > 0.0))
      throw std::invalid_argument("nilt: time points must be positive");
    if (i > 0 && t_points[i] <= t_points[i - 1])
      throw std::invalid_argument("nilt: time points must be increasing");
  }
  if (m_terms < 4) throw std::invalid_argument("nilt: m_terms too small");

  NiltResult out;
  out.values.resize(t_points.size());
  out.error_estimates.resize(t_points.size());

  std::size_t lo = 0;
  while (lo < t_points.size()) {
    std::size_t hi = lo;
    while (hi + 1 < t_points.size() && t_points[hi + 1] / t_points[lo] <= kBlockRatio)
      ++hi;
    const double t_max = t_points[hi];
    DeHoogTable tab = dehoog_prepare(f, t_max, m_terms, sigma0, sigma_margin);
    for (std::size_t i = lo; i <= hi; ++i) {
      double value, ref;
      if (!tab.breakdown) {
        std::tie(value, ref) = dehoog_eval(tab, m_terms, t_points[i]);
      } else {
        std::tie(value, ref) = euler_eval(tab, m_terms, t_points[i]);
        out.accel_fallback = true;
      }
      out.values[i] = value;
      out.error_estimates[i] = std::abs(value - ref);
    }
    lo = hi + 1;
  }
  return out;
}

NiltResult nilt(const FracTransferFunction& f, std::span<const double> t_points,
                int m_terms, double sigma0, double sigma_margin) {
  return nilt([&f](cplx s) { return tf_eval(f, s); }, t_points, m_terms, sigma0,
              sigma_margin);
}

std::complex<double> RationalTf::eval(cplx s) const {
  cplx acc{gain, 0.0};
  const std::size_t n = std::max(zeros.size(), poles.size());
  for (std::size_t k = 0; k < n; ++k) {
    if (k < zeros.size()) acc *= s + zeros[k];
    if (k < poles.size()) acc /= s + poles[k];
  }
  return acc;
}

RationalTf oustaloup(double alpha, double wb, double wh, int n_half) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("oustaloup: requires alpha in (0,1)");
  if (!(0.0 < wb && wb < wh))
    throw std::invalid_argument("oustaloup: requires 0 < wb < wh");
  if (n_half < 1) throw std::invalid_argument("oustaloup: requires N >= 1");
  RationalTf tf;
  const double ratio = wh / wb;
  const double cells = 2.0 * n_half + 1.0;
  for (int k = -n_half; k <= n_half; ++k) {
    const double ze = (k + n_half + 0.5 * (1.0 - alpha)) / cells;
    const double pe = (k + n_half + 0.5 * (1.0 + alpha)) / cells;
    tf.zeros.push_back(wb * std::pow(ratio, ze));
    tf.poles.push_back(wb * std::pow(ratio, pe));
  }
  std::sort(tf.zeros.begin(), tf.zeros.end());
  std::sort(tf.poles.begin(), tf.poles.end());
  // Gain condition |H(j wu)| = wu^alpha at wu = sqrt(wb wh); with the
  // geometric symmetry z_k p_{-k} = wu^2 this reduces to wh^alpha exactly.
  tf.gain = std::pow(wh, alpha);
  return tf;
}

double MatsudaModel::eval(double s) const {
  const std::size_t d = alphas.size() - 1;
  double w = alphas[d];
  for (std::size_t i = d; i-- > 0;) w = alphas[i] + (s - nodes[i]) / w;
  return w;
}

std::complex<double> MatsudaModel::eval(cplx s) const {
  const std::size_t d = alphas.size() - 1;
  cplx w = alphas[d];
  for (std::size_t i = d; i-- > 0;) w = alphas[i] + (s - nodes[i]) / w;
  return w;
}

MatsudaModel matsuda_fujii(std::span<const std::pair<double, double>> f_samples,
                           int depth) {
  if (depth < 0 || static_cast<std::size_t>(depth) >= f_samples.size())
    throw std::invalid_argument("matsuda_fujii: depth exceeds node count");
  std::vector<double> s(f_samples.size()), v(f_samples.size());
  for (std::size_t i = 0; i < f_samples.size(); ++i) {
    s[i] = f_samples[i].first;
    v[i] = f_samples[i].second;
    if (!(s[i] > 0.0)) throw std::invalid_argument("matsuda_fujii: nodes must be > 0");
  }

  MatsudaModel model;
  for (int stage = 0; stage <= depth; ++stage) {
    model.nodes.push_back(s[stage]);
    model.alphas.push_back(v[stage]);
    if (stage == depth) break;
    const double a_i = v[stage];
    // upsilon_{i+1}(s_j) = (s_j - s_i) / (upsilon_i(s_j) - a_i)
    bool all_degenerate = true;
    const double scale = std::max(1.0, std::abs(a_i));
    for (std::size_t j = stage + 1; j < s.size(); ++j)
      if (std::abs(v[j] - a_i) > 1e-12 * scale) all_degenerate = false;
    if (all_degenerate) break;  // interpolation already exact; truncate
    if (std::abs(v[stage + 1] - a_i) <= 1e-12 * scale) {
      // recursion breakdown at the next anchor node; reorder and retry
      std::size_t best = stage + 1;
      double best_mag = 0.0;
      for (std::size_t j = stage + 1; j < s.size(); ++j) {
        const double mag = std::abs(v[j] - a_i);
        if (mag > best_mag) {
          best_mag = mag;
          best = j;
        }
      }
      if (best == static_cast<std::size_t>(stage) + 1)
        throw NumericalFailure("matsuda_fujii: continued-fraction breakdown");
      std::swap(s[stage + 1], s[best]);
      std::swap(v[stage + 1], v[best]);
    }
    for (std::size_t j = stage + 1; j < s.size(); ++j)
      v[j] = (s[j] - s[stage]) / (v[j] - a_i);
  }
  return model;
}

namespace {

// Roots of a real polynomial (ascending coefficients) via companion matrix.
std::vector<cplx> poly_roots(const std::vector<double>& coef) {
  int deg = static_cast<int>(coef.size()) - 1;
  while (deg > 0 && coef[deg] == 0.0) --deg;
  if (deg < 1) return {};
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(deg, deg);
  for (int i = 0; i < deg; ++i) comp(0, i) = -coef[deg - 1 - i] / coef[deg];
  for (int i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp);
  std::vector<cplx> roots(deg);
  for (int i = 0; i < deg; ++i) roots[i] = es.eigenvalues()[i];
  return roots;
}

}  // namespace

RationalTf pade_s_alpha(double alpha, double s0, int m, int n) {
  if (!(s0 > 0.0)) throw std::invalid_argument("pade_s_alpha: requires s0 > 0");
  if (m < 0 || n < 0) throw std::invalid_argument("pade_s_alpha: negative order");
  RationalTf tf;
  if (m == 0 && n == 0) {
    tf.gain = std::pow(s0, alpha);
    return tf;
  }
  // Taylor coefficients of s^alpha at s0 in w = s - s0.
  std::vector<double> c(m + n + 1);
  c[0] = std::pow(s0, alpha);
  for (int k = 1; k <= m + n; ++k)
    c[k] = c[k - 1] * (alpha - (k - 1)) / (k * s0);

  std::vector<double> b(n + 1, 0.0);  // denominator, b[0] = 1
  b[0] = 1.0;
  int n_eff = n;
  while (n_eff > 0) {
    Eigen::MatrixXd sys(n_eff, n_eff);
    Eigen::VectorXd rhs(n_eff);
    for (int i = 0; i < n_eff; ++i) {
      for (int j = 0; j < n_eff; ++j) {
        const int idx = m + 1 + i - 1 - j;
        sys(i, j) = (idx >= 0 && idx <= m + n) ? c[idx] : 0.0;
      }
      rhs(i) = -c[m + 1 + i];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(sys);
    if (lu.isInvertible()) {
      Eigen::VectorXd sol = lu.solve(rhs);
      for (int j = 1; j <= n_eff; ++j) b[j] = sol(j - 1);
      break;
    }
    --n_eff;  // singular Pade system: reduce denominator order
    tf.reduced = true;
  }
  b.resize(n_eff + 1);

  std::vector<double> a(m + 1, 0.0);
  for (int i = 0; i <= m; ++i) {
    double acc = 0.0;
    for (int j = 0; j <= std::min(i, n_eff); ++j) acc += c[i - j] * b[j];
    a[i] = acc;
  }

  auto to_corners = [s0](const std::vector<double>& p) {
    std::vector<double> corners;
    for (const cplx& r : poly_roots(p)) {
      if (std::abs(r.imag()) > 1e-8 * std::max(1.0, std::abs(r.real())))
        throw NumericalFailure("pade_s_alpha: complex root in the approximant");
      corners.push_back(-(s0 + r.real()));  // factor (s + corner)
    }
    std::sort(corners.begin(), corners.end());
    return corners;
  };
  tf.zeros = to_corners(a);
  tf.poles = to_corners(b);
  const double lead_a = a.back();
  const double lead_b = b.back();
  tf.gain = lead_a / lead_b;
  return tf;
}

}  // namespace fracdose::laplace
