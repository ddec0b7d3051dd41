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

#include <span>
#include <vector>

namespace irsopt {

/// Quadratic model of g_l as a function of one IRS's phases:
///   g_l(theta) = x_l(theta) + constant,  x_l = theta^H U theta + 2 Re{theta^H q}.
/// The QoS row reads x_l <= gamma_tilde (the surrogate threshold minus constant).
struct PhaseUser {
  CMat u;  ///< Hermitian, M x M
  CVec q;
  double constant = 0.0;
  double gamma_tilde = 0.0;
  double weight = 0.0;

  [[nodiscard]] bool has_qos() const;
};

struct PhaseQuadratics {
  std::vector<PhaseUser> users;

  [[nodiscard]] Index size() const { return users.empty() ? 0 : users.front().q.size(); }
  [[nodiscard]] std::size_t num_users() const { return users.size(); }
  [[nodiscard]] double value(const CVec& theta, std::size_t l) const;
  [[nodiscard]] std::vector<double> values(const CVec& theta) const;
  /// Unpenalized objective sum_l weight_l x_l.
  [[nodiscard]] double objective(const CVec& theta) const;
  void validate() const;
};

/// Quadratics in theta1 for fixed theta2 and precoders, with
/// D_l = H_l Theta2 F2 + G_l and K_l = H_l Theta2 F3:
///   U_l = (D^H A22 D) o (F1 Xi F1^H)^T,
///   q_l = conj(diag(F1 W_l A12 D) + diag(F1 Xi K^H A22 D)).
PhaseQuadratics build_quadratics_irs1(const ChannelSet& ch, const PhaseVector& theta2,
                                      const PrecoderSet& w, const SurrogateState& state);

/// Quadratics in theta2 for fixed theta1 and precoders, with
/// T = F2 Theta1 F1 + F3 and K_l = G_l Theta1 F1:
///   U_l = (H^H A22 H) o (T Xi T^H)^T,
///   q_l = conj(diag(T W_l A12 H) + diag(T Xi K^H A22 H)).
PhaseQuadratics build_quadratics_irs2(const ChannelSet& ch, const PhaseVector& theta1,
                                      const PrecoderSet& w, const SurrogateState& state);

/// (1/mu) ln sum_l exp(mu x_l), evaluated with max subtraction.
double log_sum_exp(std::span<const double> x, double mu);

/// sum_l w_l x_l + rho (sum_l exp(mu (x_l - gamma_l)) - L) over users with a QoS row.
double penalized_objective(const CVec& theta, const PhaseQuadratics& quad, double rho, double mu);

/// Gradient with respect to conj(theta), doubled, so that
/// f(theta + h d) = f(theta) + h Re{grad^H d} + O(h^2).
CVec euclidean_grad(const CVec& theta, const PhaseQuadratics& quad, double rho, double mu);

/// Projection onto the tangent space: g - Re{g o conj(theta)} o theta.
CVec riemannian_grad(const CVec& theta, const CVec& egrad);

/// Same projection applied at the new point.
CVec vector_transport(const CVec& d, const CVec& theta_new);

/// Elementwise (theta + t d) / |theta + t d|. Throws std::domain_error when an
/// entry has modulus below 1e-14.
PhaseVector retract(const PhaseVector& theta, double t, const CVec& d);

/// Upper bound on the gradient magnitude: 2 sum_l c_l (||U_l||_F sqrt(M) + ||q_l||)
/// with c_l the penalty-weighted coefficient of user l.
double gradient_scale(const CVec& theta, const PhaseQuadratics& quad, double rho, double mu);

/// ||riemannian grad|| / gradient_scale. Zero at a stationary point of the penalized objective.
double phase_stationarity_residual(const CVec& theta, const PhaseQuadratics& quad, double rho,
                                   double mu);

/// sum_l (x_l - gamma_l) over users with a QoS row.
double slackness_gamma(const CVec& theta, const PhaseQuadratics& quad);

/// (1/mu) ln(mean_l exp(mu (x_l - gamma_l))) over users with a QoS row: the constraint the
/// price multiplies, in slack units. Nonpositive exactly when the penalty term is.
/// -inf when no user carries a QoS row.
double smoothed_slackness(const CVec& theta, const PhaseQuadratics& quad, double mu);

/// max_l |theta^H U_l theta| + 2 |theta^H q_l| + |gamma_l| over users with a QoS row: the
/// magnitude of the terms a slack is the difference of, so slacks are only
/// resolved to a small multiple of machine epsilon times this value.
double slackness_scale(const CVec& theta, const PhaseQuadratics& quad);

struct RmoOptions {
  double eps_theta = 1e-6;  ///< relative to gradient_scale
  int max_iter = 1000;
  double armijo_c = 1e-4;
  double backtrack = 0.5;
};

struct RmoResult {
  PhaseVector theta;
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> trace;  ///< objective after each accepted step, starting at theta0
};

/// Polak-Ribiere conjugate gradient on the unit-modulus manifold with Armijo backtracking.
RmoResult rmo_minimize(const PhaseQuadratics& quad, double rho, double mu, const PhaseVector& theta0,
                       const RmoOptions& options = {});

enum class PhaseStatus { unconstrained, bisected, infeasible };

const char* to_string(PhaseStatus s);

/// One price evaluation. `gamma` is smoothed_slackness and drives the bisection;
/// `gamma_sum` is slackness_gamma at the same point, kept for diagnostics, and
/// `scale` is slackness_scale there.
struct PriceProbe {
  double rho = 0.0;
  double gamma = 0.0;
  double gamma_sum = 0.0;
  int pass = 0;
  double scale = 0.0;
};

struct PhaseOptions {
  RmoOptions rmo;
  double mu = 10.0;
  double eps_rho = 1e-4;
  int t_max = 30;
  int max_doublings = 60;
};

struct PhaseResult {
  PhaseVector theta;
  PhaseStatus status = PhaseStatus::unconstrained;
  double rho = 0.0;
  double rho_lo = 0.0;
  double rho_hi = 0.0;
  std::vector<PriceProbe> probes;
  int passes = 0;
  int rmo_iterations = 0;
  bool rmo_converged = true;
  double residual = 0.0;  ///< stationarity residual at the returned point and rho
};

/// Price search: rho = 0 if the unpenalized minimizer already satisfies the
/// aggregate slackness, otherwise doubling then bisection on gamma(rho), every
/// probe warm-started from the previous one. The pass is repeated from the new
/// point until the penalized objective changes by at most eps_theta relative,
/// or t_max passes. The feasible end of the bracket is returned.
PhaseResult optimize_phases(const PhaseQuadratics& quad, const PhaseVector& theta0,
                            const PhaseOptions& options = {});

/// Nearest point of the 2^q_phi grid per entry; ties go to the smaller index.
PhaseVector project_discrete(const PhaseVector& theta, int q_phi);

}  // namespace irsopt
