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

#include "irsopt/linalg.hpp"
#include "irsopt/scenario.hpp"

#include <span>
#include <vector>

namespace irsopt {

enum class PhaseMode { continuous, discrete };

/// Diagonal of an IRS reflection matrix. Every entry has unit modulus; in
/// discrete mode every phase also lies on the 2^q grid {0, 2 pi / 2^q, ...}.
class PhaseVector {
 public:
  PhaseVector() = default;

  /// Throws std::invalid_argument if some |theta_m| deviates from 1 by more than 1e-12.
  explicit PhaseVector(CVec theta);

  static PhaseVector ones(Index m);
  static PhaseVector from_angles(const RVec& phi);
  static PhaseVector random(Index m, Rng& rng);
  /// Elementwise theta / |theta|; zero entries become 1.
  static PhaseVector normalized(const CVec& theta);
  /// Entry m is exp(j 2 pi idx[m] / 2^q).
  static PhaseVector discrete(std::span<const int> idx, int q_phi);

  [[nodiscard]] const CVec& values() const { return theta_; }
  [[nodiscard]] Index size() const { return theta_.size(); }
  [[nodiscard]] PhaseMode mode() const { return mode_; }
  [[nodiscard]] int q_phi() const { return q_phi_; }
  [[nodiscard]] cd operator[](Index m) const { return theta_(m); }

  [[nodiscard]] double max_modulus_error() const;
  /// Largest distance (radians) from a phase to the nearest grid point; 0 for continuous mode.
  [[nodiscard]] double max_grid_error() const;

 private:
  CVec theta_;
  PhaseMode mode_ = PhaseMode::continuous;
  int q_phi_ = 0;
};

/// Per-user digital precoders W_l (N_TX x N_d).
struct PrecoderSet {
  std::vector<CMat> w;

  [[nodiscard]] std::size_t size() const { return w.size(); }
  [[nodiscard]] double total_power() const;
  /// Sum_j W_j W_j^H.
  [[nodiscard]] CMat xi() const;
  /// Stacked vectorization [vec(W_1); ...; vec(W_L)].
  [[nodiscard]] CVec stacked() const;
  /// Throws std::invalid_argument if total power exceeds ps + 1e-9 (relative to ps).
  void check_budget(double ps) const;
};

/// H_l diag(t2) F2 diag(t1) F1 + G_l diag(t1) F1 + H_l diag(t2) F3.
CMat effective_channel(const ChannelSet& ch, const PhaseVector& theta1, const PhaseVector& theta2,
                       std::size_t l);
std::vector<CMat> effective_channels(const ChannelSet& ch, const PhaseVector& theta1,
                                     const PhaseVector& theta2);

/// C_l = H_l (sum_{j != l} W_j W_j^H) H_l^H + sigma2 I.
CMat interference_cov(const CMat& hbar_l, const PrecoderSet& w, double sigma2, std::size_t l);

/// V_l = W_l^H H_l^H (sum_j H_l W_j W_j^H H_l^H + sigma2 I)^{-1}.
CMat mmse_decoder(const CMat& hbar_l, const PrecoderSet& w, double sigma2, std::size_t l);

/// Rate seen through an arbitrary linear decoder V:
/// ln|I + V P P^H V^H (V C V^H)^{-1}| with P = H_l W_l.
double decoded_rate(const CMat& hbar_l, const PrecoderSet& w, double sigma2, std::size_t l,
                    const CMat& decoder);

/// ln|I + W_l^H H_l^H C_l^{-1} H_l W_l| in nats.
double user_rate(const CMat& hbar_l, const PrecoderSet& w, double sigma2, std::size_t l);

std::vector<double> user_rates(std::span<const CMat> hbar, const PrecoderSet& w, double sigma2);

double wsr(std::span<const double> rates, std::span<const double> weights);

/// Minorizer quantities for one user, frozen at the expansion point.
///
/// With g_l(W, theta) = 2 Re Tr(A12 H W_l) + Tr(A22 H Xi H^H), the bound reads
/// R_l >= constant - g_l, and the QoS requirement R_l >= gamma_eff becomes
/// g_l <= gamma_tilde.
struct UserSurrogate {
  CMat a11;
  CMat a12;
  CMat a22;
  double c_tilde = 0.0;
  double constant = 0.0;     ///< ln|X~| - Tr(X~ - I) - sigma2 Tr(A22)
  double gamma_eff = 0.0;    ///< rate threshold (nats) this surrogate enforces
  double gamma_tilde = 0.0;  ///< constant - gamma_eff
  double rate = 0.0;         ///< true rate at the expansion point
  CMat h_tilde;
  CMat c_cov;
  CMat x_tilde;
  CMat y_tilde;
};

struct SurrogateState {
  std::vector<UserSurrogate> users;
  std::vector<double> weights;
  double sigma2 = 0.0;
  PrecoderSet w_tilde;
  PhaseVector theta1;
  PhaseVector theta2;

  [[nodiscard]] std::size_t num_users() const { return users.size(); }
};

/// Builds X~, Y~ and the A blocks from a Cholesky factor of C~ (never inverts B~).
/// \p gamma_eff holds one rate threshold per user in nats.
SurrogateState build_surrogate(const ChannelSet& ch, const PhaseVector& theta1,
                               const PhaseVector& theta2, const PrecoderSet& w, double sigma2,
                               std::span<const double> weights, std::span<const double> gamma_eff);

/// Same, with sigma2, weights and a uniform threshold taken from \p config.
SurrogateState build_surrogate(const ChannelSet& ch, const PhaseVector& theta1,
                               const PhaseVector& theta2, const PrecoderSet& w,
                               const ScenarioConfig& config);

/// g_l for the given effective channel and precoders.
double surrogate_g(const UserSurrogate& s, const CMat& hbar_l, const PrecoderSet& w, std::size_t l);

/// Lower bound constant - g_l on R_l.
double surrogate_bound(const SurrogateState& state, const CMat& hbar_l, const PrecoderSet& w,
                       std::size_t l);

/// Tr(A_l B_l) = Tr(A11) + sigma2 Tr(A22) + g_l.
double surrogate_trace(const SurrogateState& state, const CMat& hbar_l, const PrecoderSet& w,
                       std::size_t l);

/// Minimization form sum_l w_l Tr(A_l B_l).
double surrogate_value(const SurrogateState& state, std::span<const CMat> hbar,
                       const PrecoderSet& w);

/// Maximization form sum_l w_l (c~_l - Tr(A_l B_l)), a lower bound on the WSR.
double surrogate_max_value(const SurrogateState& state, std::span<const CMat> hbar,
                           const PrecoderSet& w);

}  // namespace irsopt
