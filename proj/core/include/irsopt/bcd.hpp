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

#include "irsopt/phase.hpp"
#include "irsopt/precoder.hpp"
#include "irsopt/rate.hpp"
#include "irsopt/scenario.hpp"

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace irsopt {

struct BcdOptions {
  int max_iterations = 50;
  double rel_tol = 1e-5;
  /// The QoS threshold is ramped linearly to its target over this many iterations.
  int ramp_iterations = 5;
  bool optimize_theta1 = true;
  bool optimize_theta2 = true;
  bool check_monotonicity = true;
  double monotonicity_tol = 1e-8;
  QcqpForm form = QcqpForm::coupled;
  QcqpOptions qcqp;
  PhaseOptions phase;
};

/// One outer iteration. "wsr_nats" is the true WSR at the expansion point the
/// surrogate was built on; "surrogate" is the maximization-form surrogate after
/// all three block updates.
struct IterationRecord {
  int k = 0;
  double wsr_nats = 0.0;
  double surrogate = 0.0;
  std::vector<double> rates;
  double power = 0.0;
  double min_rate_slack = 0.0;  ///< min_l R_l - Gamma at the expansion point
  double gamma_eff = 0.0;       ///< ramped QoS target before per-user clamping
  QcqpStatus qcqp_status = QcqpStatus::converged;
  int qcqp_iterations = 0;
  double qcqp_kkt = 0.0;
  bool w_accepted = false;
  bool theta1_accepted = false;
  bool theta2_accepted = false;
  double rho1 = 0.0;
  double rho2 = 0.0;
  int rmo_iterations1 = 0;
  int rmo_iterations2 = 0;
  double phase_residual1 = 0.0;
  double phase_residual2 = 0.0;
  std::vector<PriceProbe> probes1;
  std::vector<PriceProbe> probes2;
  double seconds = 0.0;
};

enum class BcdStatus { converged, iteration_cap, infeasible };

const char* to_string(BcdStatus s);

struct OptReport {
  std::vector<IterationRecord> iterations;
  BcdStatus status = BcdStatus::iteration_cap;
  std::string stop_reason;
  double initial_wsr = 0.0;
  double final_wsr = 0.0;
  std::vector<double> final_rates;
  double final_power = 0.0;
  /// Largest amount by which the chain WSR_k <= S_k <= WSR_{k+1} was broken.
  double max_monotonicity_violation = 0.0;
  double seconds = 0.0;
};

/// Raised when the surrogate chain decreases by more than the tolerance.
class MonotonicityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BcdStart {
  PrecoderSet w;
  PhaseVector theta1;
  PhaseVector theta2;
};

struct BcdSolution {
  PrecoderSet w;
  PhaseVector theta1;
  PhaseVector theta2;
  OptReport report;
  DualState last_dual;
};

/// Uniform random phases, then W_l = sqrt(P_s / (L N_d)) times the leading N_d
/// right singular vectors of the resulting effective channel. Total power is P_s.
BcdStart initialize(const ScenarioConfig& config, const ChannelSet& channels, Rng& rng);

/// Alternates the precoder step, the theta1 step and the theta2 step on a
/// surrogate rebuilt at every outer iteration. A block update is kept only if
/// it does not worsen the surrogate (the precoder step must also stay
/// feasible). The per-user rate target is min(ramped Gamma, current R_l).
BcdSolution bcd_solve(const ScenarioConfig& config, const ChannelSet& channels,
                      const BcdStart& start, const BcdOptions& options = {});

/// Largest normalized KKT residual at the returned point: precoder
/// stationarity and slackness on a surrogate rebuilt there, and the phase
/// stationarity of both IRS blocks at the last prices.
double kkt_residual(const BcdSolution& solution, const ScenarioConfig& config,
                    const ChannelSet& channels, const BcdOptions& options = {});

/// One row per iteration; columns are listed in the README.
void write_report_csv(std::ostream& out, const OptReport& report);

}  // namespace irsopt
