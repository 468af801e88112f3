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

#ifndef FRACDOSE_PKMODELS_HPP
#define FRACDOSE_PKMODELS_HPP

#include <string>
#include <utility>
#include <vector>

#include "fracdose/laplace.hpp"
#include "fracdose/pktypes.hpp"

namespace fracdose::pk {

// --- closed-form fractional kinetic laws -----------------------------------

// Zero-order input of fractional order: q(t) = k0f t^alpha / Gamma(alpha+1).
double zero_order_frac(double k0f, double alpha, double t);

// i.v. bolus with fractional elimination: q(t) = q0 E_alpha(-k1f t^alpha).
double one_comp_bolus(double q0, double k1f, double alpha, double t);

// Constant-rate infusion against fractional elimination:
//   q(t) = k01 t E_{alpha,2}(-k10f t^alpha);  unbounded for alpha < 1.
double one_comp_infusion(double k01, double k10f, double alpha, double t);

// Declining power-law infusion k01 t^{alpha-1}:
//   q(t) = k01 Gamma(alpha) t^alpha E_{alpha,alpha+1}(-k10f t^alpha),
// which approaches the steady state Gamma(alpha) k01 / k10f.
double one_comp_powerlaw_infusion(double k01, double k10f, double alpha, double t);

// --- dosing regimens that compensate fractional elimination -----------------

struct DoseSchedule {
  std::vector<double> times;    // strictly increasing [days]
  std::vector<double> amounts;  // positive
};

// Same dose at widening intervals: T_i = (T_{i-1}^a + a dtau^a)^(1/a).
std::vector<double> dose_times(double t0, double dtau, double alpha, int n);

// Tapered doses at constant intervals: q_i = (q0/a) ((i+1)^a - i^a), i=0..n-1.
std::vector<double> dose_amounts(double q0, double alpha, int n);

// --- two-compartment i.v. model ---------------------------------------------

// Laplace-domain solutions
//   Q1(s) = q10 (s^a + k21f) / ((s+k12+k10)(s^a+k21f) - k12 k21f)
//   Q2(s) = q10 s^{a-1} k12 / (same denominator)
std::pair<laplace::FracTransferFunction, laplace::FracTransferFunction>
two_comp_transfer(const TwoCompParams& params);

struct SeriesResult {
  double q1 = 0.0;
  double q2 = 0.0;
  double shell_estimate = 0.0;  // magnitude of the last n-shell
  int shells_used = 0;
  bool divergence_flag = false;  // shells grew three times in a row
};

// Series solution of the two-compartment model via three-parameter
// Mittag-Leffler factors, summed over shells n <= n_max.
SeriesResult two_comp_series(const TwoCompParams& params, double t, int n_max = 60);

// Additive term converting an RL derivative to Caputo form:
//   q_i(0) t^{alpha-1} / Gamma(alpha).
double rl_to_caputo_correction(double q0_i, double alpha_ij, double t);

double concentration(double q1, double v);

// --- general n-compartment fractional model ---------------------------------

enum class InputKind { Zero, Constant, PowerLaw, PiecewiseConstant, ImpulseTrain };

struct InputSignal {
  InputKind kind = InputKind::Zero;
  double scale = 0.0;  // Constant: rate; PowerLaw: k in k t^{alpha-1}
  double alpha = 1.0;  // PowerLaw exponent parameter
  std::vector<double> times;   // PiecewiseConstant knots / impulse instants
  std::vector<double> values;  // PiecewiseConstant rates / impulse amounts

  // Pointwise rate; ImpulseTrain has no pointwise value and returns 0.
  double eval(double t) const;
};

// One mass flux of the model. to == 0 denotes elimination. The order of a
// transfer governs both the outflow term (equation `from`) and the inflow
// term (equation `to`); alpha_in lets an ingested document state the inflow
// order separately so the validator can reject mismatches.
struct Flux {
  int from = 1;
  int to = 0;
  double rate = 0.0;
  double alpha = 1.0;
  double alpha_in = -1.0;  // < 0: same as alpha
  std::string unit;        // optional, e.g. "1/day^0.5"
};

struct CompartmentModel {
  int n = 1;
  std::vector<Flux> fluxes;
  std::vector<InputSignal> inputs;  // size n (or empty = all zero)
  std::vector<double> q0;           // size n (or empty = all zero)
};

// Validates mass balance (consistent orders on both sides of every transfer),
// duplicate transfers, order ranges and declared units. Returns the model
// with alpha_in resolved. Throws MassBalanceError / UnitError /
// std::invalid_argument.
CompartmentModel build_ncomp(const CompartmentModel& model);

}  // namespace fracdose::pk

#endif  // FRACDOSE_PKMODELS_HPP
