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

#include "irsopt/bcd.hpp"
#include "irsopt/scenario.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace irsopt {

enum class Method {
  double_continuous,
  double_discrete,
  random_irs,
  single_irs_near_tx,
  single_irs_near_users,
};

enum class SweepVariable { ps_dbm, m_total, m1_split, n_tx, n_user, n_streams, n_users };

const char* to_string(Method m);
const char* to_string(SweepVariable v);
Method method_from_string(const std::string& name);
SweepVariable variable_from_string(const std::string& name);

/// A one-dimensional study. For m_total the value is the element count of each
/// IRS in the double-IRS schemes and the total count of the single-IRS schemes.
/// For m1_split the value is M1 and M2 = (base M1 + base M2) - M1.
struct SweepSpec {
  SweepVariable variable = SweepVariable::ps_dbm;
  std::vector<double> values;
  int trials = 10;
  std::vector<Method> methods;

  void validate() const;
};

/// Reads "variable", "values", "trials" and "methods" keys in key = value format.
SweepSpec parse_sweep_spec(std::istream& in);
SweepSpec load_sweep_spec(const std::filesystem::path& path);

struct ResultRow {
  Method method = Method::double_continuous;
  SweepVariable variable = SweepVariable::ps_dbm;
  double value = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;  ///< channel seed; shared by every method and sweep point of a trial
  double wsr_bits = 0.0;
  double min_rate_bits = 0.0;
  int iterations = 0;
  bool converged = false;  ///< BCD stopped on the relative-change rule
  std::string status;      ///< converged | iteration_cap | infeasible | error
  double seconds = 0.0;    ///< wall clock, written to timings.csv only
};

using LogFn = std::function<void(const std::string&)>;

struct SweepOptions {
  std::uint64_t master_seed = 1;
  int workers = 1;
  BcdOptions bcd;
  LogFn log;
};

/// Scenario for one sweep point (the N_d cap of min(N_TX, N_U) is applied here).
ScenarioConfig apply_sweep_value(const ScenarioConfig& base, SweepVariable variable, double value,
                                 const LogFn& log = {});

/// Scenario and channels seen by \p method: single-IRS schemes move every
/// element to the surviving IRS and zero the links of the other one (kept as a
/// single inert element).
struct MethodScenario {
  ScenarioConfig config;
  ChannelSet channels;
  bool use_irs1 = true;
  bool use_irs2 = true;
};

MethodScenario method_scenario(Method method, const ScenarioConfig& point, SweepVariable variable,
                               double value, std::uint64_t channel_seed);

struct MethodOutcome {
  ResultRow row;
  std::optional<BcdSolution> solution;
};

/// Projects a continuous solution onto the 2^q grid and re-solves the precoders
/// once on a surrogate built at the projected point (kept only if it does not
/// lower the surrogate). Returns precoders and projected phases.
BcdSolution discretize_solution(const BcdSolution& continuous, const ScenarioConfig& config,
                                const ChannelSet& channels, const BcdOptions& options = {});

/// Runs every (point, trial) job on a pool of \p options.workers threads. Rows
/// come back in (point, trial, method) order regardless of the worker count.
std::vector<ResultRow> run_sweep(const SweepSpec& spec, const ScenarioConfig& base,
                                 const SweepOptions& options);

struct SummaryRow {
  Method method = Method::double_continuous;
  SweepVariable variable = SweepVariable::ps_dbm;
  double value = 0.0;
  int n = 0;
  double mean_wsr_bits = 0.0;
  double std_wsr_bits = 0.0;  ///< sample standard deviation (n - 1); 0 when n = 1
  double ci95_low = 0.0;      ///< Student-t interval for the mean
  double ci95_high = 0.0;
  double mean_min_rate_bits = 0.0;
  double converged_fraction = 0.0;
};

/// Aggregates rows with status != error per (method, value), in order of first
/// appearance. Throws std::invalid_argument when no usable row exists.
std::vector<SummaryRow> emit_summary(const std::vector<ResultRow>& rows);

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_results_csv(std::istream& in);
void write_timings_csv(std::ostream& out, const std::vector<ResultRow>& rows);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

/// One plot_<method>.csv per method with columns value,mean_wsr_bits,ci95_low,ci95_high.
void write_plot_files(const std::filesystem::path& dir, const std::vector<SummaryRow>& rows);

}  // namespace irsopt
