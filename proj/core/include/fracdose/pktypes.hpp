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

#ifndef FRACDOSE_PKTYPES_HPP
#define FRACDOSE_PKTYPES_HPP

#include <string>

namespace fracdose::pk {

// Two-compartment i.v. model with classic central elimination/distribution and
// a fractional-order return flux from the peripheral compartment.
// Units: days, day^-1, day^-alpha; amounts in the units of q10; v > 0.
struct TwoCompParams {
  double k10 = 0.0;   // central elimination [1/day]
  double k12 = 0.0;   // central -> peripheral [1/day]
  double k21f = 0.0;  // peripheral -> central, fractional [1/day^alpha]
  double alpha = 1.0; // order of the return flux, in (0, 1]
  double q10 = 0.0;   // initial amount in the central compartment
  double v = 1.0;     // apparent volume of distribution
};

// Throws std::invalid_argument when rates are negative, alpha is outside
// (0, 1], or v <= 0.
void validate(const TwoCompParams& p);

// The amiodarone estimates used as the benchmark parameter set throughout:
// alpha = 0.587, k10 = 1.49/d, k12 = 2.95/d, k21f = 0.48/d^alpha, q10/v = 4.72.
TwoCompParams amiodarone();

}  // namespace fracdose::pk

#endif  // FRACDOSE_PKTYPES_HPP
