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
#include "irsopt/channel_io.hpp"
#include "irsopt/config_io.hpp"
#include "irsopt/harness.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <sstream>

namespace fs = std::filesystem;
using namespace irsopt;

namespace {

struct Common {
  std::string profile = "desk";
  std::string config;
  std::uint64_t seed = 1;
  bool seed_set = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--profile", c.profile, "Base parameter set")
      ->check(CLI::IsMember({"desk", "reference"}))
      ->capture_default_str();
  cmd->add_option("--config", c.config, "key = value file applied on top of the profile")
      ->check(CLI::ExistingFile);
  cmd->add_option_function<std::uint64_t>(
      "--seed", [&c](std::uint64_t s) { c.seed = s; c.seed_set = true; }, "Master seed (overrides the config)");
}

ScenarioConfig resolve(Common& c) {
  ScenarioConfig cfg = profile_by_name(c.profile);
  if (!c.config.empty()) cfg = load_scenario_config(c.config, cfg);
  if (c.seed_set) cfg.seed = c.seed;
  c.seed = cfg.seed;
  return cfg;
}

void log_line(const std::string& msg) { std::cerr << "irsopt: " << msg << '\n'; }

nlohmann::json config_json(const ScenarioConfig& cfg) {
  std::ostringstream os;
  write_scenario_config(os, cfg);
  std::istringstream is(os.str());
  nlohmann::json j = nlohmann::json::object();
  for (const KeyValue& kv : parse_key_values(is)) j[kv.key] = kv.value;
  return j;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

int cmd_run(Common& c, const std::string& channels_path, const std::string& trace_path,
            const std::string& summary_path, const std::string& method_name) {
  const ScenarioConfig base = resolve(c);
  // Applies the stream cap and the same validation a sweep point gets.
  ScenarioConfig cfg = apply_sweep_value(base, SweepVariable::n_streams, base.n_streams, log_line);
  const Method method = method_from_string(method_name);
  const std::uint64_t channel_seed = derive_seed(c.seed, 1, 0);
  ChannelSet ch;
  BcdOptions opt;
  if (!channels_path.empty()) {
    ch = load_channel_set(channels_path);
  } else {
    const MethodScenario ms = method_scenario(method, cfg, SweepVariable::ps_dbm, cfg.ps_dbm, channel_seed);
    cfg = ms.config;
    ch = ms.channels;
    opt.optimize_theta1 = ms.use_irs1;
    opt.optimize_theta2 = ms.use_irs2;
  }
  if (method == Method::random_irs) opt.optimize_theta1 = opt.optimize_theta2 = false;
  cfg.num_users = static_cast<int>(ch.num_users());
  cfg.n_tx_grid = grid_for_count(static_cast<int>(ch.n_tx()));
  if (!cfg.weights.empty() && cfg.weights.size() != ch.num_users()) cfg.weights.clear();

  Rng rng(derive_seed(c.seed, 2, 0, 0));
  BcdSolution sol = bcd_solve(cfg, ch, initialize(cfg, ch, rng), opt);
  if (method == Method::double_discrete) sol = discretize_solution(sol, cfg, ch, opt);
  const double kkt = kkt_residual(sol, cfg, ch, opt);
  const OptReport& rep = sol.report;

  std::cout << std::setprecision(6);
  std::cout << "method        " << to_string(method) << '\n'
            << "status        " << to_string(rep.status) << " (" << rep.stop_reason << ")\n"
            << "iterations    " << rep.iterations.size() << '\n'
            << "wsr           " << rep.final_wsr / std::numbers::ln2 << " bit/s/Hz (initial "
            << rep.initial_wsr / std::numbers::ln2 << ")\n";
  for (std::size_t l = 0; l < rep.final_rates.size(); ++l)
    std::cout << "rate[" << l << "]       " << rep.final_rates[l] / std::numbers::ln2 << " bit/s/Hz\n";
  std::cout << "power         " << rep.final_power << " W\n"
            << "kkt residual  " << kkt << '\n'
            << "seconds       " << rep.seconds << '\n';

  if (!trace_path.empty()) {
    auto out = open_out(trace_path);
    write_report_csv(out, rep);
  }
  if (!summary_path.empty()) {
    nlohmann::json j;
    j["method"] = to_string(method);
    j["status"] = to_string(rep.status);
    j["stop_reason"] = rep.stop_reason;
    j["iterations"] = rep.iterations.size();
    j["wsr_bits"] = rep.final_wsr / std::numbers::ln2;
    j["initial_wsr_bits"] = rep.initial_wsr / std::numbers::ln2;
    std::vector<double> bits;
    for (double r : rep.final_rates) bits.push_back(r / std::numbers::ln2);
    j["rates_bits"] = bits;
    j["power_w"] = rep.final_power;
    j["kkt_residual"] = kkt;
    j["seed"] = c.seed;
    j["config"] = config_json(cfg);
    auto out = open_out(summary_path);
    out << j.dump(2) << '\n';
  }
  return 0;
}

int cmd_sweep(Common& c, const std::string& sweep_path, const std::string& out_dir, int workers) {
  const ScenarioConfig cfg = resolve(c);
  const SweepSpec spec = load_sweep_spec(sweep_path);
  fs::create_directories(out_dir);
  SweepOptions so;
  so.master_seed = c.seed;
  so.workers = workers;
  so.log = log_line;
  const auto rows = run_sweep(spec, cfg, so);
  const fs::path dir(out_dir);
  {
    auto out = open_out(dir / "results.csv");
    write_results_csv(out, rows);
  }
  {
    auto out = open_out(dir / "timings.csv");
    write_timings_csv(out, rows);
  }
  const auto summary = emit_summary(rows);
  {
    auto out = open_out(dir / "summary.csv");
    write_summary_csv(out, summary);
  }
  write_plot_files(dir, summary);

  nlohmann::json meta;
  meta["version"] = IRSOPT_VERSION;
  meta["profile"] = c.profile;
  meta["master_seed"] = c.seed;
  meta["workers"] = workers;
  meta["config"] = config_json(cfg);
  meta["sweep"]["variable"] = to_string(spec.variable);
  meta["sweep"]["values"] = spec.values;
  meta["sweep"]["trials"] = spec.trials;
  std::vector<std::string> methods;
  for (Method m : spec.methods) methods.emplace_back(to_string(m));
  meta["sweep"]["methods"] = methods;
  {
    auto out = open_out(dir / "metadata.json");
    out << meta.dump(2) << '\n';
  }
  std::size_t errors = 0;
  for (const auto& r : rows) errors += r.status == "error";
  std::cout << "wrote " << rows.size() << " rows to " << (dir / "results.csv").string();
  if (errors) std::cout << " (" << errors << " failed runs)";
  std::cout << '\n';
  return 0;
}

int cmd_channels(Common& c, const std::string& out_path) {
  const ScenarioConfig cfg = resolve(c);
  Rng rng(derive_seed(c.seed, 1, 0));
  const ChannelSet ch = gen_channel_set(cfg, rng);
  if (out_path.empty() || out_path == "-") {
    write_channel_set(std::cout, ch);
  } else {
    save_channel_set(out_path, ch);
  }
  return 0;
}

int cmd_summarize(const std::string& results_path, const std::string& out_dir) {
  std::ifstream in(results_path);
  if (!in) throw std::runtime_error("cannot open " + results_path);
  const auto rows = read_results_csv(in);
  const auto summary = emit_summary(rows);
  fs::create_directories(out_dir);
  auto out = open_out(fs::path(out_dir) / "summary.csv");
  write_summary_csv(out, summary);
  write_plot_files(out_dir, summary);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted-sum-rate optimization for double-IRS multi-user MIMO downlinks"};
  app.set_version_flag("--version", std::string(IRSOPT_VERSION));
  app.require_subcommand(1);

  Common run_c;
  std::string channels_path, trace_path, summary_path, method = "double_continuous";
  auto* run = app.add_subcommand("run", "Optimize one channel realization");
  add_common(run, run_c);
  run->add_option("--channels", channels_path, "Replay a channel dump instead of drawing channels")
      ->check(CLI::ExistingFile);
  run->add_option("--method", method, "double_continuous, double_discrete, random_irs, "
                                      "single_irs_near_tx or single_irs_near_users")
      ->capture_default_str();
  run->add_option("--trace", trace_path, "Per-iteration CSV trace");
  run->add_option("--summary", summary_path, "Run summary as JSON");

  Common sweep_c;
  std::string sweep_path, out_dir = "out";
  int workers = 1;
  auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep");
  add_common(sweep, sweep_c);
  sweep->add_option("--sweep", sweep_path, "Sweep specification file")->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", out_dir, "Output directory")->capture_default_str();
  sweep->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();

  Common ch_c;
  std::string ch_out;
  auto* chan = app.add_subcommand("channels", "Draw one channel realization and dump it as text");
  add_common(chan, ch_c);
  chan->add_option("--out", ch_out, "Output file (stdout when omitted)");

  std::string results_path, summary_dir = "out";
  auto* summ = app.add_subcommand("summarize", "Recompute summary.csv and plot files from results.csv");
  summ->add_option("--results", results_path, "results.csv from a sweep")->required()->check(CLI::ExistingFile);
  summ->add_option("--out", summary_dir, "Output directory")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_c, channels_path, trace_path, summary_path, method);
    if (*sweep) return cmd_sweep(sweep_c, sweep_path, out_dir, workers);
    if (*chan) return cmd_channels(ch_c, ch_out);
    if (*summ) return cmd_summarize(results_path, summary_dir);
  } catch (const std::exception& e) {
    std::cerr << "irsopt: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
