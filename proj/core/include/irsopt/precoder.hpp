// SPDX-License-Identifier: Apache-2.0
//
// irsopt - double-IRS multi-user MIMO transceiver optimization
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include "irsopt/rate.hpp"

#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace irsopt {

/// How the interference term of the surrogate enters the precoder subproblem.
///  - coupled: g_l depends on every W_j through Tr(P_l Xi). Exact surrogate.
///  - per_user: g_l keeps only its own W_l (block-diagonal quadratic). Cheaper,
///    but no longer a minorizer of the rate, so BCD monotonicity is lost.
enum class QcqpForm { coupled, per_user };

/// Quadratic data for one user. In vectorized form the quadratic coefficient is
/// I (x) quad and the linear coefficient is vec(lin).
struct QcqpUser {
  CMat quad;  ///< H^H A22 H, N_TX x N_TX, Hermitian PSD
  CMat lin;   ///< (A12 H)^H, N_TX x N_d
  double weight = 0.0;
  /// Right-hand side of g_l <= gamma_tilde; +inf disables the constraint.
  double gamma_tilde = std::numeric_limits<double>::infinity();

  [[nodiscard]] CMat v_mat() const;
  [[nodiscard]] CVec v_vec() const;
  [[nodiscard]] bool has_qos() const { return std::isfinite(gamma_tilde); }
};

struct QcqpProblem {
  std::vector<QcqpUser> users;
  double ps = 1.0;
  QcqpForm form = QcqpForm::coupled;

  [[nodiscard]] std::size_t num_users() const { return users.size(); }
  [[nodiscard]] Index n_tx() const { return users.empty() ? 0 : users.front().quad.rows(); }

  /// Constraint function g_l(W).
  [[nodiscard]] double g(const PrecoderSet& w, std::size_t l) const;
  /// Quadratic part of g_l(W) alone (used for residual scaling).
  [[nodiscard]] double g_quadratic(const PrecoderSet& w, std::size_t l) const;
  /// sum_l weight_l g_l(W).
  [[nodiscard]] double objective(const PrecoderSet& w) const;
  void validate() const;
};

struct DualState {
  double u0 = 0.0;
  std::vector<double> u;
};

enum class QcqpStatus { converged, iteration_cap, infeasible };

const char* to_string(QcqpStatus s);

/// Normalized KKT residuals, each dimensionless.
struct QcqpKkt {
  double stationarity = 0.0;
  double power_slackness = 0.0;
  double qos_slackness = 0.0;
  double primal = 0.0;

  [[nodiscard]] double max() const;
};

struct QcqpOptions {
  double tol = 1e-6;
  int max_dual_iterations = 500;
  /// QoS multipliers beyond this (relative to the largest weight) while a
  /// constraint is still violated are taken as proof of infeasibility.
  double infeasible_dual = 1e8;
};

struct QcqpSolution {
  PrecoderSet w;
  DualState dual;
  QcqpStatus status = QcqpStatus::iteration_cap;
  int dual_iterations = 0;
  int null_space_drops = 0;
  QcqpKkt kkt;
  double objective = 0.0;
};

/// Assembles the subproblem for fixed phases from the surrogate and the current
/// effective channels. Users with a non-finite surrogate threshold get no QoS row.
QcqpProblem build_qcqp(const SurrogateState& state, std::span<const CMat> hbar, double ps,
                       QcqpForm form = QcqpForm::coupled);

/// Minimizer of the Lagrangian for the given QoS multipliers, with u0 chosen by
/// bisection so that the power constraint holds with complementary slackness.
/// Returns the precoders and writes the u0 it used into \p dual.
PrecoderSet qcqp_primal(const QcqpProblem& problem, DualState& dual, int* null_space_drops = nullptr);

/// Dual ascent on the QoS multipliers (projected Newton with a finite-difference
/// Hessian and an Armijo search on the dual function). \p warm seeds the multipliers.
QcqpSolution solve_qcqp(const QcqpProblem& problem, const QcqpOptions& options = {},
                        const DualState* warm = nullptr);

QcqpKkt qcqp_kkt(const QcqpProblem& problem, const PrecoderSet& w, const DualState& dual);

}  // namespace irsopt
