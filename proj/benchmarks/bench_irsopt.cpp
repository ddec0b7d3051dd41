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
#include "irsopt/config_io.hpp"
#include "irsopt/phase.hpp"
#include "irsopt/precoder.hpp"
#include "irsopt/rate.hpp"

#include <benchmark/benchmark.h>

using namespace irsopt;

namespace {

/// Desk deployment with M elements on each surface.
ScenarioConfig desk_with_m(int m) {
  ScenarioConfig cfg = desk_profile();
  cfg.m1_grid = cfg.m2_grid = grid_for_count(m);
  return cfg;
}

struct Point {
  ScenarioConfig cfg;
  ChannelSet ch;
  BcdStart start;
  std::vector<CMat> hbar;
  SurrogateState state;
};

Point make_point(int m) {
  Point p;
  p.cfg = desk_with_m(m);
  Rng rng(derive_seed(1, 1, 0));
  p.ch = gen_channel_set(p.cfg, rng);
  Rng init(derive_seed(1, 2, 0, 0));
  p.start = initialize(p.cfg, p.ch, init);
  p.hbar = effective_channels(p.ch, p.start.theta1, p.start.theta2);
  p.state = build_surrogate(p.ch, p.start.theta1, p.start.theta2, p.start.w, p.cfg);
  return p;
}

void BM_ChannelSet(benchmark::State& st) {
  const ScenarioConfig cfg = desk_with_m(static_cast<int>(st.range(0)));
  Rng rng(1);
  for (auto _ : st) benchmark::DoNotOptimize(gen_channel_set(cfg, rng));
}
BENCHMARK(BM_ChannelSet)->Arg(10)->Arg(20)->Arg(40);

void BM_Surrogate(benchmark::State& st) {
  const Point p = make_point(static_cast<int>(st.range(0)));
  for (auto _ : st)
    benchmark::DoNotOptimize(build_surrogate(p.ch, p.start.theta1, p.start.theta2, p.start.w, p.cfg));
}
BENCHMARK(BM_Surrogate)->Arg(10)->Arg(20)->Arg(40);

void BM_Qcqp(benchmark::State& st) {
  const Point p = make_point(20);
  const QcqpProblem prob = build_qcqp(p.state, p.hbar, p.cfg.ps_watts());
  for (auto _ : st) benchmark::DoNotOptimize(solve_qcqp(prob));
}
BENCHMARK(BM_Qcqp);

void BM_PhaseQuadratics(benchmark::State& st) {
  const Point p = make_point(static_cast<int>(st.range(0)));
  for (auto _ : st)
    benchmark::DoNotOptimize(build_quadratics_irs1(p.ch, p.start.theta2, p.start.w, p.state));
}
BENCHMARK(BM_PhaseQuadratics)->Arg(10)->Arg(20)->Arg(40);

void BM_Rmo(benchmark::State& st) {
  const Point p = make_point(static_cast<int>(st.range(0)));
  const PhaseQuadratics q = build_quadratics_irs1(p.ch, p.start.theta2, p.start.w, p.state);
  for (auto _ : st) benchmark::DoNotOptimize(rmo_minimize(q, 0.0, p.cfg.mu_smooth, p.start.theta1));
}
BENCHMARK(BM_Rmo)->Arg(10)->Arg(20)->Arg(40);

void BM_Bcd(benchmark::State& st) {
  const Point p = make_point(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(bcd_solve(p.cfg, p.ch, p.start));
}
BENCHMARK(BM_Bcd)->Arg(10)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
