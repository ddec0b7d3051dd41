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

#include <doctest.h>

#include "irsopt/config_io.hpp"
#include "irsopt/harness.hpp"
#include "oracles.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

using namespace irsopt;
using oracle::rel_err;

namespace {

ResultRow make_row(Method m, double value, double wsr, std::string status = "converged") {
  ResultRow r;
  r.method = m;
  r.variable = SweepVariable::ps_dbm;
  r.value = value;
  r.wsr_bits = wsr;
  r.min_rate_bits = 0.5 * wsr;
  r.converged = status == "converged";
  r.status = std::move(status);
  return r;
}

std::string results_text(const std::vector<ResultRow>& rows) {
  std::ostringstream os;
  write_results_csv(os, rows);
  return os.str();
}

SweepSpec small_spec(std::vector<Method> methods, int trials = 2) {
  SweepSpec s;
  s.variable = SweepVariable::ps_dbm;
  s.values = {20.0, 30.0};
  s.trials = trials;
  s.methods = std::move(methods);
  return s;
}

}  // namespace

TEST_CASE("reference deployment constants") {
  const ScenarioConfig c = reference_profile();
  CHECK(c.ps_dbm == 30.0);
  CHECK(c.noise_dbm == -80.0);
  CHECK(c.gamma_qos_nats == doctest::Approx(std::numbers::ln2).epsilon(1e-15));
  CHECK(c.mu_smooth == 10.0);
  CHECK(c.num_users == 5);
  CHECK(c.n_path == 8);
  CHECK(c.q_phi == 3);
  CHECK(c.n_tx() == 8);
  CHECK(c.n_user() == 4);
  CHECK(c.m1() == 50);
  CHECK(c.m2() == 50);
  CHECK(c.n_streams == 8);
  CHECK(rel_err(c.ps_watts(), 1.0) <= 1e-15);
  CHECK(rel_err(c.noise_watts(), 1e-11) <= 1e-15);
}

TEST_CASE("desk profile dimensions") {
  const ScenarioConfig c = desk_profile();
  CHECK(c.n_tx() == 8);
  CHECK(c.n_user() == 4);
  CHECK(c.m1() == 20);
  CHECK(c.m2() == 20);
  CHECK(c.num_users == 2);
  CHECK(c.n_streams == 1);
  CHECK(profile_by_name("reference").m1() == 50);
  CHECK_THROWS_AS(profile_by_name("huge"), std::invalid_argument);
}

TEST_CASE("enum names round trip") {
  for (Method m : {Method::double_continuous, Method::double_discrete, Method::random_irs,
                   Method::single_irs_near_tx, Method::single_irs_near_users})
    CHECK(method_from_string(to_string(m)) == m);
  for (SweepVariable v : {SweepVariable::ps_dbm, SweepVariable::m_total, SweepVariable::m1_split,
                          SweepVariable::n_tx, SweepVariable::n_user, SweepVariable::n_streams,
                          SweepVariable::n_users})
    CHECK(variable_from_string(to_string(v)) == v);
  CHECK_THROWS_AS(method_from_string("sdr"), std::invalid_argument);
  CHECK_THROWS_AS(variable_from_string("bandwidth"), std::invalid_argument);
}

TEST_CASE("sweep spec parsing and validation") {
  std::istringstream ok("# power study\nvariable = ps_dbm\nvalues = 20, 25, 30\ntrials = 4\n"
                        "methods = double_continuous, random_irs\n");
  const SweepSpec s = parse_sweep_spec(ok);
  CHECK(s.variable == SweepVariable::ps_dbm);
  CHECK(s.values == std::vector<double>{20.0, 25.0, 30.0});
  CHECK(s.trials == 4);
  REQUIRE(s.methods.size() == 2);
  CHECK(s.methods[1] == Method::random_irs);

  auto parse = [](const std::string& text) {
    std::istringstream is(text);
    return parse_sweep_spec(is);
  };
  CHECK_THROWS(parse("variable = ps_dbm\nvalues = 1\ntrials = 1\nmethods = random_irs\ncolor = red\n"));
  CHECK_THROWS(parse("variable = ps_dbm\ntrials = 1\nmethods = random_irs\n"));
  CHECK_THROWS(parse("variable = ps_dbm\nvalues = 1\ntrials = 0\nmethods = random_irs\n"));
  CHECK_THROWS(parse("variable = ps_dbm\nvalues = 1\ntrials = 1.5\nmethods = random_irs\n"));
  CHECK_THROWS(parse("variable = ps_dbm\nvalues = 1\ntrials = 1\nmethods = \n"));
  CHECK_THROWS(parse("variable = ps_dbm\nvalues = 1\ntrials = 1\nmethods = sdr\n"));
  CHECK_THROWS(parse("variable = volume\nvalues = 1\ntrials = 1\nmethods = random_irs\n"));
}

TEST_CASE("sweep values map onto the scenario") {
  const ScenarioConfig base = desk_profile();
  CHECK(apply_sweep_value(base, SweepVariable::ps_dbm, 25.0).ps_dbm == 25.0);
  const auto mt = apply_sweep_value(base, SweepVariable::m_total, 30.0);
  CHECK(mt.m1() == 30);
  CHECK(mt.m2() == 30);
  const auto split = apply_sweep_value(base, SweepVariable::m1_split, 12.0);
  CHECK(split.m1() == 12);
  CHECK(split.m2() == 28);
  CHECK_THROWS(apply_sweep_value(base, SweepVariable::m1_split, 40.0));
  CHECK_THROWS(apply_sweep_value(base, SweepVariable::n_tx, 0.0));
  CHECK_THROWS(apply_sweep_value(base, SweepVariable::n_tx, 2.5));
  CHECK(apply_sweep_value(base, SweepVariable::n_tx, 16.0).n_tx() == 16);
  CHECK(apply_sweep_value(base, SweepVariable::n_users, 3.0).num_users == 3);

  std::vector<std::string> logs;
  const LogFn log = [&](const std::string& m) { logs.push_back(m); };
  const auto nd = apply_sweep_value(base, SweepVariable::n_streams, 8.0, log);
  CHECK(nd.n_streams == 4);
  REQUIRE(logs.size() == 1);
  CHECK(logs[0].find("capped") != std::string::npos);
  logs.clear();
  CHECK(apply_sweep_value(base, SweepVariable::n_streams, 2.0, log).n_streams == 2);
  CHECK(logs.empty());

  ScenarioConfig weighted = base;
  weighted.weights = {0.25, 0.75};
  const auto nu = apply_sweep_value(weighted, SweepVariable::n_users, 3.0, log);
  CHECK(nu.weights.empty());
  CHECK(logs.size() == 1);
}

TEST_CASE("single-IRS scenarios move every element and silence the other surface") {
  const ScenarioConfig point = desk_profile();
  const std::uint64_t seed = derive_seed(9, 1, 0);
  const auto both = method_scenario(Method::double_continuous, point, SweepVariable::ps_dbm, 30.0, seed);
  CHECK(both.use_irs1);
  CHECK(both.use_irs2);
  CHECK(both.channels.m1() == 20);

  const auto tx = method_scenario(Method::single_irs_near_tx, point, SweepVariable::ps_dbm, 30.0, seed);
  CHECK(tx.config.m1() == 40);
  CHECK(tx.config.m2() == 1);
  CHECK(tx.use_irs1);
  CHECK(!tx.use_irs2);
  CHECK(tx.channels.f1.norm() > 0.0);
  CHECK(tx.channels.f2.norm() == 0.0);
  CHECK(tx.channels.f3.norm() == 0.0);
  for (const CMat& h : tx.channels.h) CHECK(h.norm() == 0.0);

  const auto us = method_scenario(Method::single_irs_near_users, point, SweepVariable::ps_dbm, 30.0, seed);
  CHECK(us.config.m1() == 1);
  CHECK(us.config.m2() == 40);
  CHECK(us.channels.f1.norm() == 0.0);
  CHECK(us.channels.f2.norm() == 0.0);
  CHECK(us.channels.f3.norm() > 0.0);
  for (const CMat& g : us.channels.g) CHECK(g.norm() == 0.0);

  // For an element sweep the value is the whole budget of a single surface.
  const auto mt = method_scenario(Method::single_irs_near_tx, apply_sweep_value(point, SweepVariable::m_total, 10.0),
                                  SweepVariable::m_total, 10.0, seed);
  CHECK(mt.config.m1() == 10);

  // The same channel seed gives the same users.
  REQUIRE(tx.channels.user_positions.size() == both.channels.user_positions.size());
  CHECK(tx.channels.user_positions[0] == both.channels.user_positions[0]);
}

TEST_CASE("summary: single row and identical rows") {
  const auto one = emit_summary({make_row(Method::random_irs, 20.0, 3.5)});
  REQUIRE(one.size() == 1);
  CHECK(one[0].n == 1);
  CHECK(one[0].mean_wsr_bits == 3.5);
  CHECK(one[0].std_wsr_bits == 0.0);
  CHECK(one[0].ci95_low == 3.5);
  CHECK(one[0].ci95_high == 3.5);
  CHECK(one[0].mean_min_rate_bits == 1.75);
  CHECK(one[0].converged_fraction == 1.0);

  const auto same = emit_summary({make_row(Method::random_irs, 20.0, 2.25), make_row(Method::random_irs, 20.0, 2.25)});
  REQUIRE(same.size() == 1);
  CHECK(same[0].n == 2);
  CHECK(same[0].mean_wsr_bits == 2.25);
  CHECK(same[0].std_wsr_bits == 0.0);
}

TEST_CASE("summary: random rows against textbook statistics") {
  // Closed-form Student-t CDFs for 2 and 4 degrees of freedom, inverted by bisection.
  const auto cdf2 = [](double t) { return 0.5 + t / (2.0 * std::sqrt(t * t + 2.0)); };
  const auto cdf4 = [](double t) { return 0.5 + t * (t * t + 6.0) / (2.0 * std::pow(t * t + 4.0, 1.5)); };
  const auto invert = [](const auto& cdf) {
    double lo = 0.0, hi = 100.0;
    for (int i = 0; i < 200; ++i) (cdf(0.5 * (lo + hi)) < 0.975 ? lo : hi) = 0.5 * (lo + hi);
    return 0.5 * (lo + hi);
  };
  const std::map<int, double> t975{{2, invert(cdf2)}, {4, invert(cdf4)}};
  CHECK(rel_err(t975.at(2), 0.95 / std::sqrt(2.0 * 0.975 * 0.025)) <= 1e-14);
  Rng rng(21);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (const auto& [df, q] : t975) {
    std::vector<ResultRow> rows;
    std::vector<double> x;
    for (int i = 0; i <= df; ++i) {
      x.push_back(u(rng));
      rows.push_back(make_row(Method::double_continuous, 25.0, x.back(), i % 2 ? "iteration_cap" : "converged"));
      rows.push_back(make_row(Method::double_continuous, 25.0, 1e9, "error"));
    }
    const double n = static_cast<double>(x.size());
    double mean = 0.0;
    for (double v : x) mean += v / n;
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    const auto s = emit_summary(rows);
    REQUIRE(s.size() == 1);
    CHECK(s[0].n == df + 1);
    CHECK(rel_err(s[0].mean_wsr_bits, mean) <= 1e-13);
    CHECK(rel_err(s[0].std_wsr_bits, sd) <= 1e-13);
    CHECK(rel_err(s[0].ci95_high - s[0].mean_wsr_bits, q * sd / std::sqrt(n)) <= 1e-12);
    CHECK(rel_err(s[0].mean_wsr_bits - s[0].ci95_low, q * sd / std::sqrt(n)) <= 1e-12);
    CHECK(rel_err(s[0].mean_min_rate_bits, 0.5 * mean) <= 1e-13);
    const double conv = std::ceil(n / 2.0) / n;
    CHECK(rel_err(s[0].converged_fraction, conv) <= 1e-15);
  }
}

TEST_CASE("summary: grouping order and errors") {
  const std::vector<ResultRow> rows{make_row(Method::random_irs, 30.0, 1.0),
                                    make_row(Method::double_continuous, 30.0, 2.0),
                                    make_row(Method::random_irs, 20.0, 3.0),
                                    make_row(Method::random_irs, 30.0, 5.0)};
  const auto s = emit_summary(rows);
  REQUIRE(s.size() == 3);
  CHECK(s[0].method == Method::random_irs);
  CHECK(s[0].value == 30.0);
  CHECK(s[0].mean_wsr_bits == 3.0);
  CHECK(s[1].method == Method::double_continuous);
  CHECK(s[2].value == 20.0);
  CHECK_THROWS_AS(emit_summary({}), std::invalid_argument);
  CHECK_THROWS_AS(emit_summary({make_row(Method::random_irs, 1.0, 0.0, "error")}), std::invalid_argument);
}

TEST_CASE("results CSV round trip and schema") {
  std::vector<ResultRow> rows{make_row(Method::double_discrete, 0.1, 1.0 / 3.0),
                              make_row(Method::single_irs_near_users, 40.0, 2e-7, "infeasible")};
  rows[0].seed = 18446744073709551557ULL;
  rows[0].trial = 7;
  rows[0].iterations = 12;
  const std::string text = results_text(rows);
  CHECK(text.rfind("method,variable,value,trial,seed,wsr_bits,min_rate_bits,iterations,converged,status\n", 0) == 0);
  CHECK(text.find("seconds") == std::string::npos);
  std::istringstream in(text);
  const auto back = read_results_csv(in);
  REQUIRE(back.size() == 2);
  CHECK(back[0].method == Method::double_discrete);
  CHECK(back[0].value == 0.1);
  CHECK(back[0].wsr_bits == 1.0 / 3.0);
  CHECK(back[0].seed == rows[0].seed);
  CHECK(back[0].trial == 7);
  CHECK(back[0].iterations == 12);
  CHECK(back[0].converged);
  CHECK(back[1].status == "infeasible");
  CHECK(!back[1].converged);
  CHECK(results_text(back) == text);

  std::istringstream bad("header\ndouble_continuous,ps_dbm,1\n");
  CHECK_THROWS(read_results_csv(bad));
  std::istringstream empty("");
  CHECK_THROWS(read_results_csv(empty));
}

TEST_CASE("summary and plot files") {
  const auto s = emit_summary({make_row(Method::random_irs, 20.0, 1.0), make_row(Method::random_irs, 20.0, 3.0),
                               make_row(Method::double_continuous, 20.0, 4.0)});
  std::ostringstream os;
  write_summary_csv(os, s);
  CHECK(os.str().rfind("method,variable,value,n,mean_wsr_bits,std_wsr_bits,ci95_low,ci95_high,"
                       "mean_min_rate_bits,converged_fraction\n", 0) == 0);
  const auto dir = std::filesystem::temp_directory_path() / "irsopt_plot_test";
  std::filesystem::create_directories(dir);
  write_plot_files(dir, s);
  std::ifstream in(dir / "plot_random_irs.csv");
  REQUIRE(in);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == "value,mean_wsr_bits,ci95_low,ci95_high");
  CHECK(row.rfind("20,2,", 0) == 0);
  CHECK(std::filesystem::exists(dir / "plot_double_continuous.csv"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("run_sweep: reproducible and independent of the worker count") {
  const ScenarioConfig base = desk_profile();
  const SweepSpec spec = small_spec({Method::double_continuous, Method::double_discrete, Method::random_irs,
                                     Method::single_irs_near_tx, Method::single_irs_near_users});
  SweepOptions o;
  o.master_seed = 17;
  const auto a = run_sweep(spec, base, o);
  const auto b = run_sweep(spec, base, o);
  o.workers = 3;
  const auto c = run_sweep(spec, base, o);
  CHECK(results_text(a) == results_text(b));
  CHECK(results_text(a) == results_text(c));
  REQUIRE(a.size() == 2 * 2 * 5);
  // (point, trial, method) order, channel seed shared across points and methods.
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].method == spec.methods[i % 5]);
    CHECK(a[i].trial == static_cast<int>((i / 5) % 2));
    CHECK(a[i].value == spec.values[i / 10]);
    CHECK(a[i].seed == derive_seed(17, 1, static_cast<std::uint64_t>(a[i].trial)));
    CHECK(a[i].status != "error");
    CHECK(a[i].wsr_bits >= 0.0);
    CHECK(a[i].converged == (a[i].status == "converged" || a[i].iterations < 50));
  }
  o.master_seed = 18;
  CHECK(results_text(run_sweep(spec, base, o)) != results_text(a));
}

TEST_CASE("run_sweep: per-run failures become error rows") {
  ScenarioConfig base = desk_profile();
  base.q_phi = 17;  // accepted by the scenario, rejected by the discrete projection
  std::vector<std::string> logs;
  SweepOptions o;
  o.log = [&](const std::string& m) { logs.push_back(m); };
  const auto rows = run_sweep(small_spec({Method::double_continuous, Method::double_discrete}, 1), base, o);
  REQUIRE(rows.size() == 4);
  for (const ResultRow& r : rows) {
    if (r.method == Method::double_discrete) {
      CHECK(r.status == "error");
      CHECK(r.wsr_bits == 0.0);
    } else {
      CHECK(r.status != "error");
    }
  }
  CHECK(logs.size() == 2);
  const auto s = emit_summary(rows);
  CHECK(s.size() == 2);
  for (const SummaryRow& x : s) CHECK(x.method == Method::double_continuous);
}

TEST_CASE("projection onto the phase grid does not raise the WSR") {
  const ScenarioConfig cfg = desk_profile();
  const auto weights = cfg.resolved_weights();
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    CAPTURE(seed);
    const auto ms = method_scenario(Method::double_continuous, cfg, SweepVariable::ps_dbm, 30.0,
                                    derive_seed(seed, 1, 0));
    Rng rng(derive_seed(seed, 2, 0, 0));
    const auto cont = bcd_solve(cfg, ms.channels, initialize(cfg, ms.channels, rng));
    const PhaseVector p1 = project_discrete(cont.theta1, cfg.q_phi);
    const PhaseVector p2 = project_discrete(cont.theta2, cfg.q_phi);
    CHECK(p1.max_grid_error() <= 1e-12);
    const double projected =
        wsr(user_rates(effective_channels(ms.channels, p1, p2), cont.w, cfg.noise_watts()), weights);
    CHECK(projected <= cont.report.final_wsr);

    // The harness variant re-solves the precoders once and keeps the better one.
    const auto disc = discretize_solution(cont, cfg, ms.channels);
    CHECK(disc.theta1.values() == p1.values());
    CHECK(disc.theta2.values() == p2.values());
    CHECK(disc.report.final_wsr >= projected * (1.0 - 1e-12));
    CHECK(disc.w.total_power() <= cfg.ps_watts() * (1.0 + 1e-9));
  }
}
