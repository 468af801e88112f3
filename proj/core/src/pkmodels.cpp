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

#include "fracdose/pkmodels.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "fracdose/errors.hpp"
#include "fracdose/specialfn.hpp"

namespace fracdose::pk {

namespace sf = fracdose::special;

void validate(const TwoCompParams& p) {
  if (p.k10 < 0 || p.k12 < 0 || p.k21f < 0)
    throw std::invalid_argument("TwoCompParams: rates must be >= 0");
  if (!(p.alpha > 0.0 && p.alpha <= 1.0))
    throw std::invalid_argument("TwoCompParams: alpha must lie in (0, 1]");
  if (!(p.v > 0.0)) throw std::invalid_argument("TwoCompParams: v must be > 0");
}

TwoCompParams amiodarone() {
  TwoCompParams p;
  p.alpha = 0.587;
  p.k10 = 1.49;
  p.k12 = 2.95;
  p.k21f = 0.48;
  p.q10 = 4.72;
  p.v = 1.0;
  return p;
}

double zero_order_frac(double k0f, double alpha, double t) {
  if (t < 0) throw std::invalid_argument("zero_order_frac: t must be >= 0");
  if (t == 0) return 0.0;
  return k0f * std::pow(t, alpha) / sf::gamma_real(alpha + 1.0);
}

double one_comp_bolus(double q0, double k1f, double alpha, double t) {
  if (t < 0) throw std::invalid_argument("one_comp_bolus: t must be >= 0");
  if (t == 0) return q0;
  return q0 * sf::ml1(alpha, -k1f * std::pow(t, alpha)).value;
}

double one_comp_infusion(double k01, double k10f, double alpha, double t) {
  if (t < 0) throw std::invalid_argument("one_comp_infusion: t must be >= 0");
  if (t == 0) return 0.0;
  return k01 * t * sf::ml2(alpha, 2.0, -k10f * std::pow(t, alpha)).value;
}

double one_comp_powerlaw_infusion(double k01, double k10f, double alpha, double t) {
  if (t < 0)
    throw std::invalid_argument("one_comp_powerlaw_infusion: t must be >= 0");
  if (t == 0) return 0.0;
  const double ta = std::pow(t, alpha);
  return k01 * sf::gamma_real(alpha) * ta *
         sf::ml2(alpha, alpha + 1.0, -k10f * ta).value;
}

std::vector<double> dose_times(double t0, double dtau, double alpha, int n) {
  if (!(t0 > 0.0) || !(dtau > 0.0))
    throw std::invalid_argument("dose_times: requires t0 > 0 and dtau > 0");
  if (n < 1) throw std::invalid_argument("dose_times: requires n >= 1");
  std::vector<double> times(n);
  double prev = t0;
  const double da = alpha * std::pow(dtau, alpha);
  for (int i = 0; i < n; ++i) {
    prev = std::pow(std::pow(prev, alpha) + da, 1.0 / alpha);
    times[i] = prev;
  }
  return times;
}

std::vector<double> dose_amounts(double q0, double alpha, int n) {
  if (!(q0 > 0.0)) throw std::invalid_argument("dose_amounts: requires q0 > 0");
  if (n < 1) throw std::invalid_argument("dose_amounts: requires n >= 1");
  std::vector<double> doses(n);
  for (int i = 0; i < n; ++i)
    doses[i] = q0 / alpha *
               (std::pow(i + 1.0, alpha) - std::pow(static_cast<double>(i), alpha));
  return doses;
}

std::pair<laplace::FracTransferFunction, laplace::FracTransferFunction>
two_comp_transfer(const TwoCompParams& p) {
  validate(p);
  const double ksum = p.k10 + p.k12;
  // Common denominator expanded: s^{a+1} + (k10+k12) s^a + k21f s + k10 k21f.
  std::vector<laplace::Term> den = {{1.0, p.alpha + 1.0},
                                    {ksum, p.alpha},
                                    {p.k21f, 1.0},
                                    {p.k10 * p.k21f, 0.0}};
  laplace::FracTransferFunction q1;
  q1.num = {{p.q10, p.alpha}, {p.q10 * p.k21f, 0.0}};
  q1.den = den;
  q1.description = "Q1(s), two-compartment i.v. model";
  q1.canonicalize();

  laplace::FracTransferFunction q2;
  q2.num = {{p.q10 * p.k12, p.alpha - 1.0}};
  q2.den = den;
  q2.description = "Q2(s), two-compartment i.v. model";
  q2.canonicalize();
  return {q1, q2};
}

SeriesResult two_comp_series(const TwoCompParams& p, double t, int n_max) {
  validate(p);
  if (t < 0) throw std::invalid_argument("two_comp_series: t must be >= 0");
  if (n_max < 1) throw std::invalid_argument("two_comp_series: n_max must be >= 1");
  SeriesResult out;
  if (t == 0.0) {
    out.q1 = p.q10;
    out.q2 = 0.0;
    out.shells_used = 0;
    return out;
  }
  const double lam = -(p.k10 + p.k12) * t;
  double tot1 = 0.0, tot2 = 0.0;
  int grow_streak = 0;
  double prev_shell = 0.0;
  bool converged = false;
  int n = 0;
  for (n = 0; n <= n_max; ++n) {
    double s1 = 0.0, s2 = 0.0;
    double binom = 1.0;  // C(n, l) built multiplicatively
    double k10l = 1.0;
    for (int l = 0; l <= n; ++l) {
      const double pref = binom * k10l;
      const double b1 = l + p.alpha * n + 1.0;
      const double b2 = l + p.alpha * (n + 1) + 1.0;
      const double rho = n + 1.0;
      const double e1 = sf::ml3({1.0, b1, rho}, lam).value;
      const double e2 = sf::ml3({1.0, b2, rho}, lam).value;
      s1 += pref * (std::pow(t, l + p.alpha * n) * e1 +
                    p.k21f * std::pow(t, l + p.alpha * (n + 1)) * e2);
      s2 += pref * std::pow(t, l + p.alpha * n + 1.0) *
            sf::ml3({1.0, b1 + 1.0, rho}, lam).value;
      binom *= static_cast<double>(n - l) / (l + 1.0);
      k10l *= p.k10;
    }
    const double sgn = (n % 2 == 0) ? 1.0 : -1.0;
    const double shell_n = std::pow(p.k21f, n);
    tot1 += sgn * shell_n * s1;
    tot2 += sgn * shell_n * s2;
    const double mag = shell_n * std::max(std::abs(s1), std::abs(s2));
    out.shell_estimate = mag;
    if (n > 0) grow_streak = (mag > prev_shell) ? grow_streak + 1 : 0;
    prev_shell = mag;
    if (n > 3 && mag < 1e-14 * std::max(std::abs(tot1), 1e-30)) {
      converged = true;
      break;
    }
  }
  // Alternating shells may rise through an initial hump before decaying; the
  // series is unreliable only when they are still growing at the cap.
  out.divergence_flag = !converged && grow_streak >= 3;
  out.shells_used = std::min(n, n_max);
  out.q1 = p.q10 * tot1;
  out.q2 = p.q10 * p.k12 * tot2;
  return out;
}

double rl_to_caputo_correction(double q0_i, double alpha_ij, double t) {
  if (q0_i == 0.0) return 0.0;
  if (t <= 0.0) {
    if (alpha_ij < 1.0)
      throw PoleError("rl_to_caputo_correction: singular at t = 0 for alpha < 1");
    if (t < 0.0)
      throw std::invalid_argument("rl_to_caputo_correction: t must be > 0");
  }
  return q0_i * std::pow(t, alpha_ij - 1.0) / sf::gamma_real(alpha_ij);
}

double concentration(double q1, double v) {
  if (!(v > 0.0)) throw std::invalid_argument("concentration: v must be > 0");
  return q1 / v;
}

double InputSignal::eval(double t) const {
  switch (kind) {
    case InputKind::Zero:
      return 0.0;
    case InputKind::Constant:
      return scale;
    case InputKind::PowerLaw:
      // declining rate k t^{alpha-1}
      return t > 0 ? scale * std::pow(t, alpha - 1.0) : 0.0;
    case InputKind::PiecewiseConstant: {
      if (times.empty() || t < times.front()) return 0.0;
      auto it = std::upper_bound(times.begin(), times.end(), t);
      const std::size_t idx = static_cast<std::size_t>(it - times.begin()) - 1;
      return idx < values.size() ? values[idx] : 0.0;
    }
    case InputKind::ImpulseTrain:
      return 0.0;  // no pointwise rate
  }
  return 0.0;
}

namespace {

// "1/day^0.587" or "mass/day^0.5"; returns the exponent of the day unit.
double parse_unit_exponent(const std::string& unit) {
  const auto pos = unit.find("day");
  if (pos == std::string::npos)
    throw UnitError("unit tag must reference day-based rates: " + unit);
  std::size_t p = pos + 3;
  if (p >= unit.size() || unit[p] != '^') return 1.0;
  ++p;
  try {
    return std::stod(unit.substr(p));
  } catch (const std::exception&) {
    throw UnitError("cannot parse unit exponent in: " + unit);
  }
}

}  // namespace

CompartmentModel build_ncomp(const CompartmentModel& model) {
  if (model.n < 1) throw std::invalid_argument("build_ncomp: need n >= 1");
  CompartmentModel out = model;
  if (out.q0.empty()) out.q0.assign(model.n, 0.0);
  if (out.inputs.empty()) out.inputs.assign(model.n, InputSignal{});
  if (static_cast<int>(out.q0.size()) != model.n ||
      static_cast<int>(out.inputs.size()) != model.n)
    throw std::invalid_argument("build_ncomp: q0/inputs size mismatch");

  std::map<std::pair<int, int>, int> seen;
  for (Flux& f : out.fluxes) {
    if (f.from < 1 || f.from > model.n || f.to < 0 || f.to > model.n ||
        f.from == f.to)
      throw std::invalid_argument("build_ncomp: flux endpoints out of range");
    if (f.rate < 0)
      throw std::invalid_argument("build_ncomp: negative rate on flux (" +
                                  std::to_string(f.from) + "," +
                                  std::to_string(f.to) + ")");
    if (!(f.alpha > 0.0 && f.alpha <= 1.0))
      throw std::invalid_argument("build_ncomp: order outside (0,1] on flux (" +
                                  std::to_string(f.from) + "," +
                                  std::to_string(f.to) + ")");
    if (++seen[{f.from, f.to}] > 1)
      throw std::invalid_argument("build_ncomp: duplicate transfer (" +
                                  std::to_string(f.from) + "," +
                                  std::to_string(f.to) + ")");
    if (f.alpha_in >= 0.0 && std::abs(f.alpha_in - f.alpha) > 1e-12)
      throw MassBalanceError(
          "build_ncomp: transfer (" + std::to_string(f.from) + "," +
          std::to_string(f.to) + ") declares outflow order " +
          std::to_string(f.alpha) + " but inflow order " +
          std::to_string(f.alpha_in) + "; mass balance requires equal orders");
    f.alpha_in = f.alpha;
    if (!f.unit.empty()) {
      const double ex = parse_unit_exponent(f.unit);
      if (std::abs(ex + f.alpha) > 1e-9 && std::abs(ex - f.alpha) > 1e-9)
        throw UnitError("build_ncomp: unit " + f.unit + " conflicts with order " +
                        std::to_string(f.alpha) + " on flux (" +
                        std::to_string(f.from) + "," + std::to_string(f.to) + ")");
    }
  }
  return out;
}

}  // namespace fracdose::pk
