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

#include "irsopt/rate.hpp"
#include "oracles.hpp"

#include <numbers>

using namespace irsopt;
using oracle::rel_err;

namespace {

struct Instance {
  ChannelSet ch;
  PhaseVector t1, t2;
  PrecoderSet w;
  double sigma2 = 0.7;
};

Instance make(std::uint64_t seed, std::size_t users = 3, Index nd = 2) {
  Rng rng(seed);
  Instance in;
  in.ch = oracle::random_channels(rng, 4, 3, 5, 4, users, 0.3);
  in.t1 = PhaseVector::random(5, rng);
  in.t2 = PhaseVector::random(4, rng);
  in.w = oracle::random_precoders(rng, 4, nd, users, 2.0);
  return in;
}

CMat hbar_of(const Instance& in, std::size_t l) { return effective_channel(in.ch, in.t1, in.t2, l); }

}  // namespace

TEST_CASE("PhaseVector construction") {
  CHECK_THROWS_AS(PhaseVector(CVec::Constant(3, cd(1.0 + 1e-9))), std::invalid_argument);
  CHECK(PhaseVector::ones(4).max_modulus_error() == 0.0);
  Rng rng(1);
  const PhaseVector r = PhaseVector::random(64, rng);
  CHECK(r.max_modulus_error() < 1e-12);
  CHECK(r.mode() == PhaseMode::continuous);
  const std::vector<int> idx{0, 1, 2, 3, 11, -1};
  const PhaseVector d = PhaseVector::discrete(idx, 2);
  CHECK(d.mode() == PhaseMode::discrete);
  CHECK(d.q_phi() == 2);
  CHECK(std::abs(d[1] - cd(0.0, 1.0)) < 1e-15);
  CHECK(std::abs(d[4] - cd(0.0, -1.0)) < 1e-15);  // 11 wraps to 3
  CHECK(std::abs(d[5] - cd(0.0, -1.0)) < 1e-15);  // -1 wraps to 3
  CHECK(d.max_grid_error() < 1e-12);
  const PhaseVector n = PhaseVector::normalized(CVec::Constant(2, cd(3.0, 4.0)));
  CHECK(std::abs(n[0] - cd(0.6, 0.8)) < 1e-15);
}

TEST_CASE("PrecoderSet power bookkeeping") {
  Rng rng(2);
  PrecoderSet w = oracle::random_precoders(rng, 4, 2, 3, 1.5);
  CHECK(w.total_power() == doctest::Approx(1.5).epsilon(1e-13));
  CHECK(w.xi().trace().real() == doctest::Approx(1.5).epsilon(1e-13));
  CHECK(w.stacked().squaredNorm() == doctest::Approx(1.5).epsilon(1e-13));
  CHECK_NOTHROW(w.check_budget(1.5));
  CHECK_THROWS_AS(w.check_budget(1.0), std::invalid_argument);
}

TEST_CASE("effective_channel: zero channels give a zero matrix") {
  Instance in = make(3);
  in.ch.f1.setZero();
  in.ch.f3.setZero();
  for (std::size_t l = 0; l < in.ch.num_users(); ++l) CHECK(hbar_of(in, l).norm() == 0.0);
}

TEST_CASE("effective_channel: identity phases") {
  Instance in = make(4);
  const PhaseVector o1 = PhaseVector::ones(5), o2 = PhaseVector::ones(4);
  for (std::size_t l = 0; l < in.ch.num_users(); ++l) {
    const CMat ref = in.ch.h[l] * in.ch.f2 * in.ch.f1 + in.ch.g[l] * in.ch.f1 + in.ch.h[l] * in.ch.f3;
    CHECK(rel_err(effective_channel(in.ch, o1, o2, l), ref) < 1e-14);
  }
}

TEST_CASE("effective_channel matches the element-wise oracle") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Instance in = make(100 + s);
    for (std::size_t l = 0; l < in.ch.num_users(); ++l) {
      const CMat ref = oracle::effective_channel_loops(in.ch, in.t1.values(), in.t2.values(), l);
      CHECK(rel_err(hbar_of(in, l), ref) < 1e-12);
    }
    const auto all = effective_channels(in.ch, in.t1, in.t2);
    CHECK(all.size() == in.ch.num_users());
  }
}

TEST_CASE("effective_channel rejects mismatched phases") {
  const Instance in = make(5);
  CHECK_THROWS_AS((void)effective_channel(in.ch, PhaseVector::ones(4), in.t2, 0), std::invalid_argument);
  CHECK_THROWS_AS((void)effective_channel(in.ch, in.t1, in.t2, 7), std::invalid_argument);
}

TEST_CASE("interference_cov edge cases and spectrum") {
  Instance in = make(6);
  const CMat h = hbar_of(in, 0);
  PrecoderSet single;
  single.w = {in.w.w[0]};
  CHECK(rel_err(interference_cov(h, single, 0.7, 0), 0.7 * CMat::Identity(3, 3)) < 1e-15);
  PrecoderSet zero = in.w;
  for (CMat& x : zero.w) x.setZero();
  CHECK(rel_err(interference_cov(h, zero, 0.7, 1), 0.7 * CMat::Identity(3, 3)) < 1e-15);
  for (std::size_t l = 0; l < 3; ++l) {
    const CMat c = interference_cov(hbar_of(in, l), in.w, 0.7, l);
    CHECK(rel_err(c, oracle::covariance(hbar_of(in, l), in.w, 0.7, l)) < 1e-13);
    CHECK((c - c.adjoint()).norm() < 1e-14 * c.norm());
    Eigen::SelfAdjointEigenSolver<CMat> es(c);
    CHECK(es.eigenvalues().minCoeff() >= 0.7 - 1e-10);
  }
  CHECK_THROWS_AS((void)interference_cov(h, in.w, 0.0, 0), std::invalid_argument);
}

TEST_CASE("mmse_decoder: zero precoder and scalar formula") {
  Instance in = make(7);
  PrecoderSet w = in.w;
  w.w[1].setZero();
  CHECK(mmse_decoder(hbar_of(in, 1), w, 0.7, 1).norm() == 0.0);

  CMat h(1, 1);
  h(0, 0) = cd(0.8, -0.3);
  PrecoderSet s;
  s.w = {CMat::Constant(1, 1, cd(0.2, 0.9))};
  const cd hw = h(0, 0) * s.w[0](0, 0);
  const cd ref = std::conj(s.w[0](0, 0)) * std::conj(h(0, 0)) / (std::norm(hw) + 0.4);
  CHECK(std::abs(mmse_decoder(h, s, 0.4, 0)(0, 0) - ref) < 1e-15);
}

TEST_CASE("decoded rate with the MMSE receiver equals the capacity formula") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Instance in = make(200 + s);
    for (std::size_t l = 0; l < 3; ++l) {
      const CMat h = hbar_of(in, l);
      const CMat v = mmse_decoder(h, in.w, in.sigma2, l);
      const double r = user_rate(h, in.w, in.sigma2, l);
      CHECK(rel_err(decoded_rate(h, in.w, in.sigma2, l, v), r) < 1e-10);
      CHECK(rel_err(oracle::rate_mse(h, in.w, in.sigma2, l, v), r) < 1e-10);
    }
  }
}

TEST_CASE("user_rate: closed forms and determinant identity") {
  Instance in = make(8);
  PrecoderSet w = in.w;
  w.w[2].setZero();
  CHECK(user_rate(hbar_of(in, 2), w, 0.7, 2) == 0.0);

  CMat h(1, 1);
  h(0, 0) = cd(0.5, 1.5);
  PrecoderSet s;
  s.w = {CMat::Constant(1, 1, cd(std::sqrt(3.0), 0.0))};
  CHECK(user_rate(h, s, 0.25, 0) == doctest::Approx(std::log(1.0 + 2.5 * 3.0 / 0.25)).epsilon(1e-14));

  for (std::uint64_t k = 0; k < 10; ++k) {
    const Instance r = make(300 + k);
    const auto hb = effective_channels(r.ch, r.t1, r.t2);
    const auto rates = user_rates(hb, r.w, r.sigma2);
    for (std::size_t l = 0; l < 3; ++l) {
      CHECK(rates[l] >= 0.0);
      CHECK(rel_err(rates[l], oracle::rate_det(hb[l], r.w, r.sigma2, l)) < 1e-10);
    }
  }
}

TEST_CASE("wsr is a weighted sum") {
  const std::vector<double> r{0.4, 0.4, 0.4};
  const std::vector<double> u{1.0 / 3, 1.0 / 3, 1.0 / 3};
  CHECK(wsr(r, u) == doctest::Approx(0.4));
  const std::vector<double> r2{0.3, 1.7, 0.9};
  const std::vector<double> e{0.0, 1.0, 0.0};
  CHECK(wsr(r2, e) == 1.7);
  Rng rng(9);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<double> a(6), b(6);
  double ref = 0.0;
  for (int i = 0; i < 6; ++i) {
    a[i] = u01(rng);
    b[i] = u01(rng);
    ref += a[i] * b[i];
  }
  CHECK(wsr(a, b) == doctest::Approx(ref).epsilon(1e-15));
  const std::vector<double> short_w{1.0};
  CHECK_THROWS_AS((void)wsr(a, short_w), std::invalid_argument);
}
