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

#include "irsopt/rate.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace irsopt {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

void check_user(const CMat& hbar_l, const PrecoderSet& w, double sigma2, std::size_t l) {
  require(sigma2 > 0.0, "noise power must be positive");
  require(l < w.size(), "user index out of range");
  for (const CMat& wj : w.w) require(wj.rows() == hbar_l.cols(), "precoder rows must equal N_TX");
}

CMat total_cov(const CMat& hbar_l, const PrecoderSet& w, double sigma2) {
  const CMat hx = hbar_l * w.xi();
  CMat c = hx * hbar_l.adjoint();
  c.diagonal().array() += sigma2;
  return hermitian_part(c);
}

}  // namespace

PhaseVector::PhaseVector(CVec theta) : theta_(std::move(theta)) {
  require(max_modulus_error() <= 1e-12, "PhaseVector entries must have unit modulus");
}

PhaseVector PhaseVector::ones(Index m) { return PhaseVector(CVec::Ones(m)); }

PhaseVector PhaseVector::from_angles(const RVec& phi) {
  CVec t(phi.size());
  for (Index m = 0; m < phi.size(); ++m) t(m) = std::polar(1.0, phi(m));
  return PhaseVector(std::move(t));
}

PhaseVector PhaseVector::random(Index m, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, kTwoPi);
  RVec phi(m);
  for (Index i = 0; i < m; ++i) phi(i) = u(rng);
  return from_angles(phi);
}

PhaseVector PhaseVector::normalized(const CVec& theta) {
  CVec t(theta.size());
  for (Index m = 0; m < theta.size(); ++m) {
    const double a = std::abs(theta(m));
    t(m) = a > 0.0 ? theta(m) / a : cd(1.0, 0.0);
  }
  return PhaseVector(std::move(t));
}

PhaseVector PhaseVector::discrete(std::span<const int> idx, int q_phi) {
  require(q_phi >= 1 && q_phi <= 16, "q_phi must lie in [1, 16]");
  const int levels = 1 << q_phi;
  CVec t(static_cast<Index>(idx.size()));
  for (std::size_t m = 0; m < idx.size(); ++m) {
    const int k = ((idx[m] % levels) + levels) % levels;
    t(static_cast<Index>(m)) = std::polar(1.0, kTwoPi * k / levels);
  }
  PhaseVector p(std::move(t));
  p.mode_ = PhaseMode::discrete;
  p.q_phi_ = q_phi;
  return p;
}

double PhaseVector::max_modulus_error() const {
  return theta_.size() ? (theta_.array().abs() - 1.0).abs().maxCoeff() : 0.0;
}

double PhaseVector::max_grid_error() const {
  if (mode_ == PhaseMode::continuous || theta_.size() == 0) return 0.0;
  const double step = kTwoPi / (1 << q_phi_);
  double worst = 0.0;
  for (Index m = 0; m < theta_.size(); ++m) {
    double phi = std::arg(theta_(m));
    if (phi < 0.0) phi += kTwoPi;
    const double r = phi / step;
    worst = std::max(worst, std::abs(r - std::round(r)) * step);
  }
  return worst;
}

double PrecoderSet::total_power() const {
  double p = 0.0;
  for (const CMat& wl : w) p += wl.squaredNorm();
  return p;
}

CMat PrecoderSet::xi() const {
  require(!w.empty(), "empty precoder set");
  CMat x = CMat::Zero(w.front().rows(), w.front().rows());
  for (const CMat& wl : w) x.noalias() += wl * wl.adjoint();
  return x;
}

CVec PrecoderSet::stacked() const {
  Index n = 0;
  for (const CMat& wl : w) n += wl.size();
  CVec x(n);
  Index off = 0;
  for (const CMat& wl : w) {
    x.segment(off, wl.size()) = vec(wl);
    off += wl.size();
  }
  return x;
}

void PrecoderSet::check_budget(double ps) const {
  if (total_power() > ps + 1e-9 * std::max(1.0, ps))
    throw std::invalid_argument("precoders exceed the power budget");
}

CMat effective_channel(const ChannelSet& ch, const PhaseVector& theta1, const PhaseVector& theta2,
                       std::size_t l) {
  require(l < ch.num_users(), "user index out of range");
  require(theta1.size() == ch.m1() && theta2.size() == ch.m2(), "phase length mismatch");
  require(ch.f2.rows() == ch.m2() && ch.f2.cols() == ch.m1(), "F2 shape mismatch");
  require(ch.g[l].cols() == ch.m1() && ch.h[l].cols() == ch.m2(), "user channel shape mismatch");
  const CMat t1f1 = theta1.values().asDiagonal() * ch.f1;
  const CMat d = theta2.values().asDiagonal() * (ch.f2 * t1f1 + ch.f3);
  return ch.h[l] * d + ch.g[l] * t1f1;
}

std::vector<CMat> effective_channels(const ChannelSet& ch, const PhaseVector& theta1,
                                     const PhaseVector& theta2) {
  ch.validate();
  require(theta1.size() == ch.m1() && theta2.size() == ch.m2(), "phase length mismatch");
  const CMat t1f1 = theta1.values().asDiagonal() * ch.f1;
  const CMat d = theta2.values().asDiagonal() * (ch.f2 * t1f1 + ch.f3);
  std::vector<CMat> out;
  out.reserve(ch.num_users());
  for (std::size_t l = 0; l < ch.num_users(); ++l) out.push_back(ch.h[l] * d + ch.g[l] * t1f1);
  return out;
}

CMat interference_cov(const CMat& hbar_l, const PrecoderSet& w, double sigma2, std::size_t l) {
  check_user(hbar_l, w, sigma2, l);
  CMat c = CMat::Zero(hbar_l.rows(), hbar_l.rows());
  for (std::size_t j = 0; j < w.size(); ++j) {
    if (j == l) continue;
    const CMat p = hbar_l * w.w[j];
    c.noalias() += p * p.adjoint();
  }
  c.diagonal().array() += sigma2;
  return hermitian_part(c);
}

CMat mmse_decoder(const CMat& hbar_l, const PrecoderSet& w, double sigma2, std::size_t l) {
  check_user(hbar_l, w, sigma2, l);
  const CMat total = total_cov(hbar_l, w, sigma2);
  const CMat p = hbar_l * w.w[l];
  // V = P^H T^{-1} = (T^{-1} P)^H since T is Hermitian.
  return solve_hpd(total, p).adjoint();
}

double decoded_rate(const CMat& hbar_l, const PrecoderSet& w, double sigma2, std::size_t l,
                    const CMat& decoder) {
  check_user(hbar_l, w, sigma2, l);
  require(decoder.cols() == hbar_l.rows(), "decoder columns must equal N_U");
  const CMat c = interference_cov(hbar_l, w, sigma2, l);
  const CMat s = decoder * hbar_l * w.w[l];
  const CMat m = hermitian_part(decoder * c * decoder.adjoint());
  const CMat ms = hermitian_part(m + s * s.adjoint());
  return logdet_hpd(ms) - logdet_hpd(m);
}

double user_rate(const CMat& hbar_l, const PrecoderSet& w, double sigma2, std::size_t l) {
  check_user(hbar_l, w, sigma2, l);
  const CMat c = interference_cov(hbar_l, w, sigma2, l);
  Eigen::LLT<CMat> llt(c);
  if (llt.info() != Eigen::Success) throw std::domain_error("interference covariance not PD");
  const CMat z = llt.matrixL().solve(hbar_l * w.w[l]);
  CMat x = z.adjoint() * z;
  x.diagonal().array() += 1.0;
  return std::max(0.0, logdet_hpd(hermitian_part(x)));
}

std::vector<double> user_rates(std::span<const CMat> hbar, const PrecoderSet& w, double sigma2) {
  require(hbar.size() == w.size(), "one effective channel per user required");
  std::vector<double> r(hbar.size());
  for (std::size_t l = 0; l < hbar.size(); ++l) r[l] = user_rate(hbar[l], w, sigma2, l);
  return r;
}

double wsr(std::span<const double> rates, std::span<const double> weights) {
  require(rates.size() == weights.size(), "rates and weights differ in length");
  double s = 0.0;
  for (std::size_t l = 0; l < rates.size(); ++l) s += weights[l] * rates[l];
  return s;
}

SurrogateState build_surrogate(const ChannelSet& ch, const PhaseVector& theta1,
                               const PhaseVector& theta2, const PrecoderSet& w, double sigma2,
                               std::span<const double> weights, std::span<const double> gamma_eff) {
  const std::size_t L = ch.num_users();
  require(w.size() == L && weights.size() == L && gamma_eff.size() == L,
          "per-user inputs must have one entry per user");
  require(sigma2 > 0.0, "noise power must be positive");

  SurrogateState st;
  st.weights.assign(weights.begin(), weights.end());
  st.sigma2 = sigma2;
  st.w_tilde = w;
  st.theta1 = theta1;
  st.theta2 = theta2;
  const auto hbar = effective_channels(ch, theta1, theta2);

  st.users.resize(L);
  for (std::size_t l = 0; l < L; ++l) {
    UserSurrogate& u = st.users[l];
    u.h_tilde = hbar[l];
    u.c_cov = interference_cov(hbar[l], w, sigma2, l);
    Eigen::LLT<CMat> llt(u.c_cov);
    if (llt.info() != Eigen::Success) throw std::domain_error("interference covariance not PD");
    const CMat p = hbar[l] * w.w[l];
    const CMat cinv_p = llt.solve(p);  // C~^{-1} P
    const Index nd = p.cols();
    u.x_tilde = hermitian_part(CMat::Identity(nd, nd) + p.adjoint() * cinv_p);
    u.y_tilde = -cinv_p.adjoint();
    u.a11 = u.x_tilde;
    u.a12 = u.y_tilde;
    u.a22 = hermitian_part(u.y_tilde.adjoint() * solve_hpd(u.x_tilde, u.y_tilde));

    const double ld = logdet_hpd(u.x_tilde);
    const double excess = (p.adjoint() * cinv_p).real().trace();
    u.c_tilde = ld + static_cast<double>(nd);
    u.constant = ld - excess - sigma2 * u.a22.real().trace();
    u.gamma_eff = gamma_eff[l];
    u.gamma_tilde = u.constant - u.gamma_eff;
    u.rate = std::max(0.0, ld);
  }
  return st;
}

SurrogateState build_surrogate(const ChannelSet& ch, const PhaseVector& theta1,
                               const PhaseVector& theta2, const PrecoderSet& w,
                               const ScenarioConfig& config) {
  const auto weights = config.resolved_weights();
  const std::vector<double> gamma(ch.num_users(), config.gamma_qos_nats);
  return build_surrogate(ch, theta1, theta2, w, config.noise_watts(), weights, gamma);
}

double surrogate_g(const UserSurrogate& s, const CMat& hbar_l, const PrecoderSet& w,
                   std::size_t l) {
  require(l < w.size(), "user index out of range");
  const CMat hx = hbar_l * w.xi() * hbar_l.adjoint();
  return 2.0 * re_trace_product(s.a12, hbar_l * w.w[l]) + re_trace_product(s.a22, hx);
}

double surrogate_bound(const SurrogateState& state, const CMat& hbar_l, const PrecoderSet& w,
                       std::size_t l) {
  require(l < state.num_users(), "user index out of range");
  return state.users[l].constant - surrogate_g(state.users[l], hbar_l, w, l);
}

double surrogate_trace(const SurrogateState& state, const CMat& hbar_l, const PrecoderSet& w,
                       std::size_t l) {
  require(l < state.num_users(), "user index out of range");
  const UserSurrogate& u = state.users[l];
  return u.a11.real().trace() + state.sigma2 * u.a22.real().trace() + surrogate_g(u, hbar_l, w, l);
}

double surrogate_value(const SurrogateState& state, std::span<const CMat> hbar,
                       const PrecoderSet& w) {
  require(hbar.size() == state.num_users(), "one effective channel per user required");
  double v = 0.0;
  for (std::size_t l = 0; l < hbar.size(); ++l)
    v += state.weights[l] * surrogate_trace(state, hbar[l], w, l);
  return v;
}

double surrogate_max_value(const SurrogateState& state, std::span<const CMat> hbar,
                           const PrecoderSet& w) {
  require(hbar.size() == state.num_users(), "one effective channel per user required");
  double v = 0.0;
  for (std::size_t l = 0; l < hbar.size(); ++l)
    v += state.weights[l] * surrogate_bound(state, hbar[l], w, l);
  return v;
}

}  // namespace irsopt
