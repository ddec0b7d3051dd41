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

#include "irsopt/harness.hpp"

#include "irsopt/config_io.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

namespace irsopt {

namespace {

constexpr double kBits = 1.0 / std::numbers::ln2;

int as_count(double v, const char* what) {
  if (v != std::floor(v) || v < 1.0)
    throw std::invalid_argument(std::string(what) + " must be a positive integer");
  return static_cast<int>(v);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t");
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

ResultRow row_from(Method m, SweepVariable var, double value, int trial, std::uint64_t seed,
                   const BcdSolution& s) {
  ResultRow r;
  r.method = m;
  r.variable = var;
  r.value = value;
  r.trial = trial;
  r.seed = seed;
  r.wsr_bits = s.report.final_wsr * kBits;
  const auto& rates = s.report.final_rates;
  r.min_rate_bits = rates.empty() ? 0.0 : *std::min_element(rates.begin(), rates.end()) * kBits;
  r.iterations = static_cast<int>(s.report.iterations.size());
  r.converged = s.report.stop_reason == "relative_change";
  r.status = to_string(s.report.status);
  r.seconds = s.report.seconds;
  return r;
}

}  // namespace

const char* to_string(Method m) {
  switch (m) {
    case Method::double_continuous: return "double_continuous";
    case Method::double_discrete: return "double_discrete";
    case Method::random_irs: return "random_irs";
    case Method::single_irs_near_tx: return "single_irs_near_tx";
    case Method::single_irs_near_users: return "single_irs_near_users";
  }
  return "unknown";
}

const char* to_string(SweepVariable v) {
  switch (v) {
    case SweepVariable::ps_dbm: return "ps_dbm";
    case SweepVariable::m_total: return "m_total";
    case SweepVariable::m1_split: return "m1_split";
    case SweepVariable::n_tx: return "n_tx";
    case SweepVariable::n_user: return "n_user";
    case SweepVariable::n_streams: return "n_streams";
    case SweepVariable::n_users: return "n_users";
  }
  return "unknown";
}

Method method_from_string(const std::string& name) {
  for (Method m : {Method::double_continuous, Method::double_discrete, Method::random_irs,
                   Method::single_irs_near_tx, Method::single_irs_near_users})
    if (name == to_string(m)) return m;
  throw std::invalid_argument("unknown method '" + name + "'");
}

SweepVariable variable_from_string(const std::string& name) {
  for (SweepVariable v : {SweepVariable::ps_dbm, SweepVariable::m_total, SweepVariable::m1_split,
                          SweepVariable::n_tx, SweepVariable::n_user, SweepVariable::n_streams,
                          SweepVariable::n_users})
    if (name == to_string(v)) return v;
  throw std::invalid_argument("unknown sweep variable '" + name + "'");
}

void SweepSpec::validate() const {
  if (values.empty()) throw std::invalid_argument("sweep needs at least one value");
  if (methods.empty()) throw std::invalid_argument("sweep needs at least one method");
  if (trials < 1) throw std::invalid_argument("sweep trials must be >= 1");
  for (double v : values)
    if (!std::isfinite(v)) throw std::invalid_argument("sweep values must be finite");
}

SweepSpec parse_sweep_spec(std::istream& in) {
  SweepSpec s;
  for (const KeyValue& kv : parse_key_values(in)) {
    if (kv.key == "variable") s.variable = variable_from_string(kv.value);
    else if (kv.key == "values") s.values = parse_number_list(kv.value);
    else if (kv.key == "trials") s.trials = as_count(std::stod(kv.value), "trials");
    else if (kv.key == "methods") {
      s.methods.clear();
      for (const auto& name : split_list(kv.value)) s.methods.push_back(method_from_string(name));
    } else {
      throw std::runtime_error("line " + std::to_string(kv.line) + ": unknown key '" + kv.key + "'");
    }
  }
  s.validate();
  return s;
}

SweepSpec load_sweep_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open sweep file " + path.string());
  return parse_sweep_spec(in);
}

ScenarioConfig apply_sweep_value(const ScenarioConfig& base, SweepVariable var, double value,
                                 const LogFn& log) {
  ScenarioConfig c = base;
  switch (var) {
    case SweepVariable::ps_dbm: c.ps_dbm = value; break;
    case SweepVariable::m_total: {
      const int m = as_count(value, "m_total");
      c.m1_grid = grid_for_count(m);
      c.m2_grid = grid_for_count(m);
      break;
    }
    case SweepVariable::m1_split: {
      const int total = base.m1() + base.m2();
      const int m1 = as_count(value, "m1_split");
      if (m1 >= total) throw std::invalid_argument("m1_split must leave at least one element for IRS2");
      c.m1_grid = grid_for_count(m1);
      c.m2_grid = grid_for_count(total - m1);
      break;
    }
    case SweepVariable::n_tx: c.n_tx_grid = grid_for_count(as_count(value, "n_tx")); break;
    case SweepVariable::n_user: c.n_user_grid = grid_for_count(as_count(value, "n_user")); break;
    case SweepVariable::n_streams: c.n_streams = as_count(value, "n_streams"); break;
    case SweepVariable::n_users:
      c.num_users = as_count(value, "n_users");
      if (!c.weights.empty() && static_cast<int>(c.weights.size()) != c.num_users) {
        c.weights.clear();
        if (log) log("weights reset to uniform for " + std::to_string(c.num_users) + " users");
      }
      break;
  }
  const int cap = std::min(c.n_tx(), c.n_user());
  if (c.n_streams > cap) {
    if (log)
      log("n_streams " + std::to_string(c.n_streams) + " capped at min(N_TX, N_U) = " +
          std::to_string(cap));
    c.n_streams = cap;
  }
  c.validate();
  return c;
}

MethodScenario method_scenario(Method method, const ScenarioConfig& point, SweepVariable var,
                               double value, std::uint64_t channel_seed) {
  MethodScenario ms;
  ms.config = point;
  const bool near_tx = method == Method::single_irs_near_tx;
  const bool near_users = method == Method::single_irs_near_users;
  if (near_tx || near_users) {
    const int m = var == SweepVariable::m_total ? as_count(value, "m_total") : point.m1() + point.m2();
    (near_tx ? ms.config.m1_grid : ms.config.m2_grid) = grid_for_count(m);
    (near_tx ? ms.config.m2_grid : ms.config.m1_grid) = ArrayGrid{1, 1};
    ms.use_irs1 = near_tx;
    ms.use_irs2 = near_users;
  }
  Rng rng(channel_seed);
  ms.channels = gen_channel_set(ms.config, rng);
  ChannelSet& ch = ms.channels;
  if (!ms.use_irs2) {
    ch.f2.setZero();
    ch.f3.setZero();
    for (CMat& h : ch.h) h.setZero();
  }
  if (!ms.use_irs1) {
    ch.f1.setZero();
    ch.f2.setZero();
    for (CMat& g : ch.g) g.setZero();
  }
  return ms;
}

BcdSolution discretize_solution(const BcdSolution& cont, const ScenarioConfig& config,
                                const ChannelSet& ch, const BcdOptions& opt) {
  BcdSolution out = cont;
  out.theta1 = project_discrete(cont.theta1, config.q_phi);
  out.theta2 = project_discrete(cont.theta2, config.q_phi);
  const double sigma2 = config.noise_watts();
  const auto weights = config.resolved_weights();

  auto hbar = effective_channels(ch, out.theta1, out.theta2);
  auto rates = user_rates(hbar, out.w, sigma2);
  std::vector<double> target(rates.size());
  for (std::size_t l = 0; l < rates.size(); ++l) target[l] = std::min(config.gamma_qos_nats, rates[l]);
  const SurrogateState st = build_surrogate(ch, out.theta1, out.theta2, out.w, sigma2, weights, target);
  const QcqpProblem prob = build_qcqp(st, hbar, config.ps_watts(), opt.form);
  const QcqpSolution qs = solve_qcqp(prob, opt.qcqp, &cont.last_dual);
  if (qs.status != QcqpStatus::infeasible && qs.kkt.primal <= opt.qcqp.tol &&
      qs.objective <= prob.objective(out.w)) {
    out.w = qs.w;
    out.last_dual = qs.dual;
    rates = user_rates(hbar, out.w, sigma2);
  }
  out.report.final_rates = rates;
  out.report.final_wsr = wsr(rates, weights);
  out.report.final_power = out.w.total_power();
  if (config.gamma_qos_nats > 0.0 &&
      *std::min_element(rates.begin(), rates.end()) < config.gamma_qos_nats)
    out.report.status = BcdStatus::infeasible;
  return out;
}

std::vector<ResultRow> run_sweep(const SweepSpec& spec, const ScenarioConfig& base,
                                 const SweepOptions& options) {
  spec.validate();
  std::mutex log_mutex;
  auto log = [&](const std::string& msg) {
    if (!options.log) return;
    std::lock_guard<std::mutex> lock(log_mutex);
    options.log(msg);
  };

  // Validate every point up front so a bad sweep fails before any work starts.
  std::vector<ScenarioConfig> points;
  for (double v : spec.values) points.push_back(apply_sweep_value(base, spec.variable, v, log));

  const std::size_t n_jobs = spec.values.size() * static_cast<std::size_t>(spec.trials);
  std::vector<std::vector<ResultRow>> slots(n_jobs);
  std::atomic<std::size_t> next{0};

  auto run_job = [&](std::size_t job) {
    const std::size_t p = job / static_cast<std::size_t>(spec.trials);
    const int trial = static_cast<int>(job % static_cast<std::size_t>(spec.trials));
    const double value = spec.values[p];
    const std::uint64_t channel_seed = derive_seed(options.master_seed, 1, static_cast<std::uint64_t>(trial));
    const std::uint64_t init_seed =
        derive_seed(options.master_seed, 2, static_cast<std::uint64_t>(p), static_cast<std::uint64_t>(trial));

    std::optional<BcdSolution> continuous;
    std::optional<MethodScenario> dbl;
    auto double_scenario = [&]() -> const MethodScenario& {
      if (!dbl) dbl = method_scenario(Method::double_continuous, points[p], spec.variable, value, channel_seed);
      return *dbl;
    };
    auto continuous_solution = [&]() -> const BcdSolution& {
      if (!continuous) {
        const MethodScenario& ms = double_scenario();
        Rng rng(init_seed);
        continuous = bcd_solve(ms.config, ms.channels, initialize(ms.config, ms.channels, rng), options.bcd);
      }
      return *continuous;
    };

    for (Method m : spec.methods) {
      ResultRow row;
      row.method = m;
      row.variable = spec.variable;
      row.value = value;
      row.trial = trial;
      row.seed = channel_seed;
      try {
        const auto t0 = std::chrono::steady_clock::now();
        switch (m) {
          case Method::double_continuous:
            row = row_from(m, spec.variable, value, trial, channel_seed, continuous_solution());
            break;
          case Method::double_discrete: {
            const BcdSolution& c = continuous_solution();
            const MethodScenario& ms = double_scenario();
            row = row_from(m, spec.variable, value, trial, channel_seed,
                           discretize_solution(c, ms.config, ms.channels, options.bcd));
            row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            break;
          }
          case Method::random_irs: {
            const MethodScenario& ms = double_scenario();
            BcdOptions o = options.bcd;
            o.optimize_theta1 = false;
            o.optimize_theta2 = false;
            Rng rng(init_seed);
            row = row_from(m, spec.variable, value, trial, channel_seed,
                           bcd_solve(ms.config, ms.channels, initialize(ms.config, ms.channels, rng), o));
            break;
          }
          case Method::single_irs_near_tx:
          case Method::single_irs_near_users: {
            const MethodScenario ms = method_scenario(m, points[p], spec.variable, value, channel_seed);
            BcdOptions o = options.bcd;
            o.optimize_theta1 = ms.use_irs1;
            o.optimize_theta2 = ms.use_irs2;
            Rng rng(init_seed);
            row = row_from(m, spec.variable, value, trial, channel_seed,
                           bcd_solve(ms.config, ms.channels, initialize(ms.config, ms.channels, rng), o));
            break;
          }
        }
      } catch (const std::exception& e) {
        row.status = "error";
        row.wsr_bits = 0.0;
        row.min_rate_bits = 0.0;
        log(std::string(to_string(m)) + " at " + to_string(spec.variable) + "=" + format_double(value) +
            " trial " + std::to_string(trial) + " failed: " + e.what());
      }
      slots[job].push_back(row);
    }
  };

  const int workers = std::max(1, std::min<int>(options.workers, static_cast<int>(n_jobs)));
  auto worker = [&]() {
    for (std::size_t job = next++; job < n_jobs; job = next++) run_job(job);
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<ResultRow> rows;
  for (auto& s : slots) rows.insert(rows.end(), s.begin(), s.end());
  return rows;
}

std::vector<SummaryRow> emit_summary(const std::vector<ResultRow>& rows) {
  struct Group {
    SummaryRow head;
    std::vector<double> wsr;
    double min_rate = 0.0;
    int converged = 0;
  };
  std::vector<Group> groups;
  for (const ResultRow& r : rows) {
    if (r.status == "error") continue;
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) {
      return g.head.method == r.method && g.head.variable == r.variable && g.head.value == r.value;
    });
    if (it == groups.end()) {
      Group g;
      g.head.method = r.method;
      g.head.variable = r.variable;
      g.head.value = r.value;
      groups.push_back(g);
      it = std::prev(groups.end());
    }
    it->wsr.push_back(r.wsr_bits);
    it->min_rate += r.min_rate_bits;
    it->converged += r.converged ? 1 : 0;
  }
  if (groups.empty()) throw std::invalid_argument("emit_summary: no usable rows");

  std::vector<SummaryRow> out;
  for (Group& g : groups) {
    SummaryRow s = g.head;
    const auto n = static_cast<double>(g.wsr.size());
    s.n = static_cast<int>(g.wsr.size());
    double sum = 0.0;
    for (double v : g.wsr) sum += v;
    s.mean_wsr_bits = sum / n;
    double ss = 0.0;
    for (double v : g.wsr) ss += (v - s.mean_wsr_bits) * (v - s.mean_wsr_bits);
    s.std_wsr_bits = s.n > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    double half = 0.0;
    if (s.n > 1) {
      const boost::math::students_t dist(n - 1.0);
      half = boost::math::quantile(boost::math::complement(dist, 0.025)) * s.std_wsr_bits / std::sqrt(n);
    }
    s.ci95_low = s.mean_wsr_bits - half;
    s.ci95_high = s.mean_wsr_bits + half;
    s.mean_min_rate_bits = g.min_rate / n;
    s.converged_fraction = g.converged / n;
    out.push_back(s);
  }
  return out;
}

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << "method,variable,value,trial,seed,wsr_bits,min_rate_bits,iterations,converged,status\n";
  for (const ResultRow& r : rows) {
    out << to_string(r.method) << ',' << to_string(r.variable) << ',' << format_double(r.value) << ','
        << r.trial << ',' << r.seed << ',' << format_double(r.wsr_bits) << ','
        << format_double(r.min_rate_bits) << ',' << r.iterations << ',' << (r.converged ? 1 : 0)
        << ',' << r.status << '\n';
  }
}

std::vector<ResultRow> read_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("results file is empty");
  std::vector<ResultRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream is(line);
    std::string cell;
    while (std::getline(is, cell, ',')) f.push_back(cell);
    if (f.size() != 10) throw std::runtime_error("results line " + std::to_string(lineno) + ": expected 10 fields");
    ResultRow r;
    r.method = method_from_string(f[0]);
    r.variable = variable_from_string(f[1]);
    r.value = std::stod(f[2]);
    r.trial = std::stoi(f[3]);
    r.seed = std::stoull(f[4]);
    r.wsr_bits = std::stod(f[5]);
    r.min_rate_bits = std::stod(f[6]);
    r.iterations = std::stoi(f[7]);
    r.converged = f[8] == "1";
    r.status = f[9];
    rows.push_back(r);
  }
  return rows;
}

void write_timings_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << "method,variable,value,trial,seconds\n";
  for (const ResultRow& r : rows)
    out << to_string(r.method) << ',' << to_string(r.variable) << ',' << format_double(r.value) << ','
        << r.trial << ',' << format_double(r.seconds) << '\n';
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "method,variable,value,n,mean_wsr_bits,std_wsr_bits,ci95_low,ci95_high,mean_min_rate_bits,"
         "converged_fraction\n";
  for (const SummaryRow& s : rows)
    out << to_string(s.method) << ',' << to_string(s.variable) << ',' << format_double(s.value) << ','
        << s.n << ',' << format_double(s.mean_wsr_bits) << ',' << format_double(s.std_wsr_bits) << ','
        << format_double(s.ci95_low) << ',' << format_double(s.ci95_high) << ','
        << format_double(s.mean_min_rate_bits) << ',' << format_double(s.converged_fraction) << '\n';
}

void write_plot_files(const std::filesystem::path& dir, const std::vector<SummaryRow>& rows) {
  std::vector<Method> seen;
  for (const SummaryRow& s : rows)
    if (std::find(seen.begin(), seen.end(), s.method) == seen.end()) seen.push_back(s.method);
  for (Method m : seen) {
    const auto path = dir / (std::string("plot_") + to_string(m) + ".csv");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "value,mean_wsr_bits,ci95_low,ci95_high\n";
    for (const SummaryRow& s : rows)
      if (s.method == m)
        out << format_double(s.value) << ',' << format_double(s.mean_wsr_bits) << ','
            << format_double(s.ci95_low) << ',' << format_double(s.ci95_high) << '\n';
  }
}

}  // namespace irsopt
