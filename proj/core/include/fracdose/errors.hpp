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

#ifndef FRACDOSE_ERRORS_HPP
#define FRACDOSE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace fracdose {

struct PoleError : std::domain_error {
  using std::domain_error::domain_error;
};

struct OverflowError : std::range_error {
  using std::range_error::range_error;
};

struct NonConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RegimeError : std::domain_error {
  using std::domain_error::domain_error;
};

struct MassBalanceError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct UnitError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Non-finite state, failed factorization, QD breakdown past recovery, ...
struct NumericalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace fracdose

#endif  // FRACDOSE_ERRORS_HPP
