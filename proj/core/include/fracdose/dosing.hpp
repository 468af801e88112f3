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

#ifndef FRACDOSE_DOSING_HPP
#define FRACDOSE_DOSING_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fracdose/glkernel.hpp"
#include "fracdose/pktypes.hpp"

namespace fracdose::dosing {

// Finite-horizon dosing problem: minimise sum_k (x_ref - x_k)' Q (x_ref - x_k)
// (+ beta_u sum u^2) over the dose sequence, subject to the GL prediction
// model, 0 <= x <= x_max and 0 <= u <= u_max. Doses are administration rates
// applied for one control interval at times j * t_d.
struct OcpSpec {
  double n_days = 7.0;
  double t_c = 0.01;   // control sampling time [days]
  double t_d = 0.5;    // inter-dose interval, integer multiple of t_c
  double x_max = 0.5;
  double u_max = 0.5;
  Eigen::Vector2d q_weights{0.0, 1.0};  // diagonal of Q
  double beta_u = 0.0;
  double ref_q1 = 0.0;
  double ref_q2 = 0.35;  // demo set-point below the printed bound
  std::vector<double> ref_q1_traj;  // optional per-step override, size N+1
  std::vector<double> ref_q2_traj;
  std::size_t nu = 0;  // GL memory depth; 0 selects ceil(5 days / t_c)
  Eigen::Vector2d x0{0.0, 0.0};
};

std::size_t default_nu(const OcpSpec& spec);
int n_doses(const OcpSpec& spec);
int horizon_steps(const OcpSpec& spec);

// Condensed QP over the dose vector: J(u) = 0.5 u'H u + g'u + c subject to
// C u <= c_bound and 0 <= u <= u_max. States were eliminated through the
// augmented GL dynamics; resp_*/free_* reconstruct the predicted trajectory.
struct CondensedQp {
  Eigen::MatrixXd hess;
  Eigen::VectorXd grad;
  double constant = 0.0;
  Eigen::MatrixXd c_ineq;
  Eigen::VectorXd c_bound;
  double u_max = 0.0;
  double t_c = 0.0;
  Eigen::MatrixXd resp_q1, resp_q2;  // (N+1) x n_doses unit-dose responses
  Eigen::VectorXd free_q1, free_q2;  // free evolution from the initial state
};

CondensedQp build_qp(const OcpSpec& spec, const pk::TwoCompParams& model);

struct DosingPlan {
  Eigen::VectorXd doses;
  gl::Trajectory predicted;
  double objective = 0.0;
  double kkt_residual = 0.0;
  bool converged = true;
};

// Dual-accelerated projected-gradient solve: bounds by projection, state
// constraints by dualisation; restarts on non-monotone progress; the KKT
// residual (stationarity, primal feasibility, complementary slackness) is
// recomputed from scratch on the returned iterate.
DosingPlan solve_qp(const CondensedQp& qp, double tol = 1e-6);

DosingPlan plan_individual(const OcpSpec& spec, const pk::TwoCompParams& model);

double cost_tracking_energy(const OcpSpec& spec, const gl::Trajectory& traj,
                            const Eigen::VectorXd& doses);
double cost_window(const OcpSpec& spec, const gl::Trajectory& traj,
                   const Eigen::Vector2d& x_lo, const Eigen::Vector2d& x_hi);

// Per-parameter interval box for the robust problem.
struct ParamBox {
  pk::TwoCompParams lo;
  pk::TwoCompParams hi;
};

// The 2^4 vertex parameter sets of a box (k10, k12, k21f, alpha extremes).
std::vector<pk::TwoCompParams> box_vertices(const ParamBox& box);

// Minimises the worst cost over the 16 box vertices (subgradient outer loop,
// warm-started at the box-centre plan; the returned plan never does worse
// than that start).
DosingPlan plan_minimax(const OcpSpec& spec, const ParamBox& box);

struct PopulationSample {
  std::vector<pk::TwoCompParams> members;
  std::uint64_t seed = 0;
  std::string generation;
};

// Lognormal rates with coefficient of variation cv (exact mean), logit-normal
// alpha clipped to (0.05, 1]; reproducible from the seed.
PopulationSample sample_population(const pk::TwoCompParams& nominal, double cv,
                                   int l, std::uint64_t seed);

// Sample-average plan: one shared dose sequence minimising (1/L) sum_i J_i
// with every member's state constraints enforced.
DosingPlan plan_stochastic(const OcpSpec& spec, const PopulationSample& sample);

// Offset-free augmentation [[A-hat, E],[0, I]] with E = [I2; 0], input
// [B-hat; 0]; the disturbance dimension equals the physical state dimension.
struct OffsetFreeSystem {
  gl::AugmentedLtiSystem base;
  bool with_disturbance = true;
  std::size_t dim() const { return base.dim() + (with_disturbance ? 2 : 0); }
  Eigen::MatrixXd dense() const;
  Eigen::VectorXd dense_input() const;
  Eigen::RowVectorXd output_map() const;  // measures q1
};

OffsetFreeSystem augment_offset_free(const gl::AugmentedLtiSystem& system);

// Steady-state Kalman correction gain for the (augmented) system with process
// noise w I and measurement noise v; solved by a structure-preserving
// doubling iteration of the filter Riccati equation to 1e-10.
Eigen::VectorXd observer_gain(const OffsetFreeSystem& system, double w, double v);

// One predict-correct step. estimate holds the stacked state (plus the
// disturbance when augmented), newest block first.
Eigen::VectorXd observer_update(const OffsetFreeSystem& system,
                                const Eigen::VectorXd& gain,
                                const Eigen::VectorXd& estimate,
                                double measurement, double input);

struct MpcOptions {
  bool offset_free = true;
  double meas_noise_sd = 0.0;
  std::uint64_t seed = 0;
  double obs_w = 1e-7;  // process noise scale
  double obs_v = 1e-5;  // measurement noise scale
  double qp_tol = 1e-9;
  Eigen::Vector2d plant_bias{0.0, 0.0};  // constant additive disturbance
};

struct MpcLog {
  std::vector<double> t;        // per control step
  std::vector<double> u;        // applied rate (zero between doses)
  std::vector<double> q1_true, q2_true;
  std::vector<double> q1_est, q2_est;
  std::vector<double> d1_est, d2_est;
  std::vector<double> c;        // measured-compartment concentration
  bool qp_failure = false;
};

// Receding-horizon run: at each dosing instant solves the shrinking-horizon
// QP from the current estimate, applies the first dose, advances the plant on
// the same grid, measures q1 (plus noise), and updates the observer.
MpcLog mpc_run(const OcpSpec& spec, const pk::TwoCompParams& plant,
               const pk::TwoCompParams& model, const MpcOptions& options);

}  // namespace fracdose::dosing

#endif  // FRACDOSE_DOSING_HPP
