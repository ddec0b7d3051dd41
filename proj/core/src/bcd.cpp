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

#include "irsopt/bcd.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

namespace irsopt {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<double> clamp_targets(double target, const std::vector<double>& rates) {
  std::vector<double> g(rates.size());
  for (std::size_t l = 0; l < rates.size(); ++l) g[l] = std::min(target, rates[l]);
  return g;
}

double min_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : *std::min_element(v.begin(), v.end());
}

}  // namespace

const char* to_string(BcdStatus s) {
  switch (s) {
    case BcdStatus::converged: return "converged";
    case BcdStatus::iteration_cap: return "iteration_cap";
    case BcdStatus::infeasible: return "infeasible";
  }
  return "unknown";
}

BcdStart initialize(const ScenarioConfig& config, const ChannelSet& ch, Rng& rng) {
  ch.validate();
  BcdStart s;
  s.theta1 = PhaseVector::random(ch.m1(), rng);
  s.theta2 = PhaseVector::random(ch.m2(), rng);
  const auto hbar = effective_channels(ch, s.theta1, s.theta2);
  const Index nd = std::min<Index>(config.n_streams, ch.n_tx());
  const double amp =
      std::sqrt(config.ps_watts() / (static_cast<double>(ch.num_users()) * static_cast<double>(nd)));
  for (const CMat& h : hbar) {
    Eigen::JacobiSVD<CMat> svd(h, Eigen::ComputeFullV);
    s.w.w.push_back(amp * svd.matrixV().leftCols(nd));
  }
  return s;
}

BcdSolution bcd_solve(const ScenarioConfig& config, const ChannelSet& ch, const BcdStart& start,
                      const BcdOptions& opt) {
  const auto t_start = Clock::now();
  ch.validate();
  const double sigma2 = config.noise_watts();
  const double ps = config.ps_watts();
  const double gamma = config.gamma_qos_nats;
  const auto weights = config.resolved_weights();
  if (weights.size() != ch.num_users()) throw std::invalid_argument("bcd_solve: weight count mismatch");
  start.w.check_budget(ps);

  BcdOptions o = opt;
  o.phase.mu = config.mu_smooth;

  BcdSolution sol;
  sol.w = start.w;
  sol.theta1 = start.theta1;
  sol.theta2 = start.theta2;
  OptReport& rep = sol.report;

  auto hbar = effective_channels(ch, sol.theta1, sol.theta2);
  auto rates = user_rates(hbar, sol.w, sigma2);
  rep.initial_wsr = wsr(rates, weights);

  auto monotone = [&](double lower, double upper, const char* what, int k) {
    const double tol = o.monotonicity_tol * std::max(1.0, std::abs(lower));
    const double gap = lower - upper;
    rep.max_monotonicity_violation = std::max(rep.max_monotonicity_violation, gap);
    if (gap > tol && o.check_monotonicity) {
      std::ostringstream os;
      os << std::setprecision(17) << "surrogate chain broken at iteration " << k << " (" << what
         << "): " << lower << " > " << upper;
      throw MonotonicityError(os.str());
    }
  };

  DualState warm;
  double s_prev = std::numeric_limits<double>::quiet_NaN();
  rep.status = BcdStatus::iteration_cap;
  rep.stop_reason = "iteration_cap";
  for (int k = 0; k < o.max_iterations; ++k) {
    const auto t_iter = Clock::now();
    IterationRecord rec;
    rec.k = k;
    rec.rates = rates;
    rec.wsr_nats = wsr(rates, weights);
    rec.power = sol.w.total_power();
    rec.min_rate_slack = min_of(rates) - gamma;
    const double ramp =
        o.ramp_iterations > 0 ? std::min(1.0, static_cast<double>(k + 1) / o.ramp_iterations) : 1.0;
    rec.gamma_eff = gamma * ramp;
    if (k > 0) monotone(s_prev, rec.wsr_nats, "surrogate above next rate", k);

    const SurrogateState state =
        build_surrogate(ch, sol.theta1, sol.theta2, sol.w, sigma2, weights,
                        clamp_targets(rec.gamma_eff, rates));

    // Precoder block.
    const QcqpProblem prob = build_qcqp(state, hbar, ps, o.form);
    const QcqpSolution qs = solve_qcqp(prob, o.qcqp, &warm);
    rec.qcqp_status = qs.status;
    rec.qcqp_iterations = qs.dual_iterations;
    rec.qcqp_kkt = qs.kkt.max();
    if (qs.status != QcqpStatus::infeasible && qs.kkt.primal <= o.qcqp.tol &&
        qs.objective <= prob.objective(sol.w)) {
      sol.w = qs.w;
      warm = qs.dual;
      sol.last_dual = qs.dual;
      rec.w_accepted = true;
    }

    // Phase blocks, theta1 first.
    if (o.optimize_theta1) {
      const PhaseQuadratics q1 = build_quadratics_irs1(ch, sol.theta2, sol.w, state);
      const PhaseResult pr = optimize_phases(q1, sol.theta1, o.phase);
      rec.rho1 = pr.rho;
      rec.rmo_iterations1 = pr.rmo_iterations;
      rec.phase_residual1 = pr.residual;
      rec.probes1 = pr.probes;
      if (q1.objective(pr.theta.values()) <= q1.objective(sol.theta1.values())) {
        sol.theta1 = pr.theta;
        rec.theta1_accepted = true;
      }
    }
    if (o.optimize_theta2) {
      const PhaseQuadratics q2 = build_quadratics_irs2(ch, sol.theta1, sol.w, state);
      const PhaseResult pr = optimize_phases(q2, sol.theta2, o.phase);
      rec.rho2 = pr.rho;
      rec.rmo_iterations2 = pr.rmo_iterations;
      rec.phase_residual2 = pr.residual;
      rec.probes2 = pr.probes;
      if (q2.objective(pr.theta.values()) <= q2.objective(sol.theta2.values())) {
        sol.theta2 = pr.theta;
        rec.theta2_accepted = true;
      }
    }

    hbar = effective_channels(ch, sol.theta1, sol.theta2);
    rec.surrogate = surrogate_max_value(state, hbar, sol.w);
    monotone(rec.wsr_nats, rec.surrogate, "block updates lowered the surrogate", k);
    rates = user_rates(hbar, sol.w, sigma2);
    rec.seconds = seconds_since(t_iter);

    const double s_now = rec.surrogate;
    rep.iterations.push_back(std::move(rec));
    if (std::isfinite(s_prev) &&
        std::abs(s_now - s_prev) <= o.rel_tol * std::max(std::abs(s_prev), 1e-300)) {
      rep.status = BcdStatus::converged;
      rep.stop_reason = "relative_change";
      s_prev = s_now;
      break;
    }
    s_prev = s_now;
  }
  if (!rep.iterations.empty()) monotone(s_prev, wsr(rates, weights), "final rate below surrogate",
                                        static_cast<int>(rep.iterations.size()));

  rep.final_rates = rates;
  rep.final_wsr = wsr(rates, weights);
  rep.final_power = sol.w.total_power();
  if (gamma > 0.0 && min_of(rates) < gamma) rep.status = BcdStatus::infeasible;
  rep.seconds = seconds_since(t_start);
  return sol;
}

double kkt_residual(const BcdSolution& sol, const ScenarioConfig& config, const ChannelSet& ch,
                    const BcdOptions& opt) {
  const double sigma2 = config.noise_watts();
  const auto weights = config.resolved_weights();
  const auto hbar = effective_channels(ch, sol.theta1, sol.theta2);
  const auto rates = user_rates(hbar, sol.w, sigma2);
  const SurrogateState state = build_surrogate(ch, sol.theta1, sol.theta2, sol.w, sigma2, weights,
                                               clamp_targets(config.gamma_qos_nats, rates));
  const QcqpProblem prob = build_qcqp(state, hbar, config.ps_watts(), opt.form);
  // Multipliers for the rebuilt problem; the primal point stays the returned one.
  const QcqpSolution ref = solve_qcqp(prob, opt.qcqp, &sol.last_dual);
  double r = qcqp_kkt(prob, sol.w, ref.dual).max();

  const auto& its = sol.report.iterations;
  const double rho1 = its.empty() ? 0.0 : its.back().rho1;
  const double rho2 = its.empty() ? 0.0 : its.back().rho2;
  if (opt.optimize_theta1) {
    const PhaseQuadratics q1 = build_quadratics_irs1(ch, sol.theta2, sol.w, state);
    r = std::max(r, phase_stationarity_residual(sol.theta1.values(), q1, rho1, config.mu_smooth));
  }
  if (opt.optimize_theta2) {
    const PhaseQuadratics q2 = build_quadratics_irs2(ch, sol.theta1, sol.w, state);
    r = std::max(r, phase_stationarity_residual(sol.theta2.values(), q2, rho2, config.mu_smooth));
  }
  // Unit-modulus slackness is exact by construction of PhaseVector.
  r = std::max(r, std::max(sol.theta1.max_modulus_error(), sol.theta2.max_modulus_error()));
  return r;
}

void write_report_csv(std::ostream& out, const OptReport& rep) {
  const auto flags = out.flags();
  const auto prec = out.precision();
  out << std::setprecision(17);
  out << "k,wsr_nats,wsr_bits,surrogate,power,min_rate_slack,gamma_eff,qcqp_status,qcqp_iterations,"
         "qcqp_kkt,w_accepted,theta1_accepted,theta2_accepted,rho1,rho2,rmo_iterations1,"
         "rmo_iterations2,phase_residual1,phase_residual2,rates_nats,seconds\n";
  for (const IterationRecord& r : rep.iterations) {
    out << r.k << ',' << r.wsr_nats << ',' << r.wsr_nats / std::numbers::ln2 << ',' << r.surrogate
        << ',' << r.power << ',' << r.min_rate_slack << ',' << r.gamma_eff << ','
        << to_string(r.qcqp_status) << ',' << r.qcqp_iterations << ',' << r.qcqp_kkt << ','
        << r.w_accepted << ',' << r.theta1_accepted << ',' << r.theta2_accepted << ',' << r.rho1
        << ',' << r.rho2 << ',' << r.rmo_iterations1 << ',' << r.rmo_iterations2 << ','
        << r.phase_residual1 << ',' << r.phase_residual2 << ',';
    for (std::size_t l = 0; l < r.rates.size(); ++l) out << (l ? ";" : "") << r.rates[l];
    out << ',' << r.seconds << '\n';
  }
  out.flags(flags);
  out.precision(prec);
}

}  // namespace irsopt
