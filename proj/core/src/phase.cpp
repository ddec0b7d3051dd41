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

#include "irsopt/phase.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace irsopt {

namespace {

/// diag(X Y) without forming the product.
CVec diag_product(const CMat& x, const CMat& y) {
  return x.cwiseProduct(y.transpose()).rowwise().sum();
}

void check_inputs(const ChannelSet& ch, const PrecoderSet& w, const SurrogateState& state) {
  ch.validate();
  if (w.size() != ch.num_users() || state.num_users() != ch.num_users())
    throw std::invalid_argument("phase quadratics: one precoder and surrogate per user required");
}

PhaseUser make_user(const CMat& c1, const CMat& c2, const CVec& lin, double constant,
                    const UserSurrogate& s, double weight) {
  PhaseUser p;
  p.u = hermitian_part(c1.cwiseProduct(c2.transpose()));
  p.q = lin.conjugate();
  p.constant = constant;
  p.gamma_tilde = s.gamma_tilde - constant;
  p.weight = weight;
  return p;
}

/// Penalty coefficients c_l = w_l + rho mu exp(mu (x_l - gamma_l)).
std::vector<double> coefficients(const CVec& theta, const PhaseQuadratics& quad, double rho,
                                 double mu) {
  std::vector<double> c(quad.num_users());
  for (std::size_t l = 0; l < c.size(); ++l) {
    c[l] = quad.users[l].weight;
    if (rho > 0.0 && quad.users[l].has_qos())
      c[l] += rho * mu * std::exp(mu * (quad.value(theta, l) - quad.users[l].gamma_tilde));
  }
  return c;
}

double re_inner(const CVec& a, const CVec& b) { return a.dot(b).real(); }

}  // namespace

bool PhaseUser::has_qos() const { return std::isfinite(gamma_tilde); }

double PhaseQuadratics::value(const CVec& theta, std::size_t l) const {
  const PhaseUser& p = users.at(l);
  return theta.dot(p.u * theta).real() + 2.0 * theta.dot(p.q).real();
}

std::vector<double> PhaseQuadratics::values(const CVec& theta) const {
  std::vector<double> x(users.size());
  for (std::size_t l = 0; l < users.size(); ++l) x[l] = value(theta, l);
  return x;
}

double PhaseQuadratics::objective(const CVec& theta) const {
  double v = 0.0;
  for (std::size_t l = 0; l < users.size(); ++l) v += users[l].weight * value(theta, l);
  return v;
}

void PhaseQuadratics::validate() const {
  if (users.empty()) throw std::invalid_argument("phase quadratics: no users");
  for (const PhaseUser& p : users)
    if (p.u.rows() != size() || p.u.cols() != size() || p.q.size() != size())
      throw std::invalid_argument("phase quadratics: inconsistent sizes");
}

PhaseQuadratics build_quadratics_irs1(const ChannelSet& ch, const PhaseVector& theta2,
                                      const PrecoderSet& w, const SurrogateState& state) {
  check_inputs(ch, w, state);
  if (theta2.size() != ch.m2()) throw std::invalid_argument("theta2 length mismatch");
  const CMat xi = w.xi();
  const CMat f1xi = ch.f1 * xi;
  const CMat c2 = f1xi * ch.f1.adjoint();
  const CMat t2f2 = theta2.values().asDiagonal() * ch.f2;
  const CMat t2f3 = theta2.values().asDiagonal() * ch.f3;

  PhaseQuadratics out;
  for (std::size_t l = 0; l < ch.num_users(); ++l) {
    const UserSurrogate& s = state.users[l];
    const CMat d = ch.h[l] * t2f2 + ch.g[l];
    const CMat k = ch.h[l] * t2f3;
    const CMat a22d = s.a22 * d;
    const CVec lin = diag_product(ch.f1 * w.w[l], s.a12 * d) + diag_product(f1xi * k.adjoint(), a22d);
    const double constant = re_trace_product(s.a22, k * xi * k.adjoint()) +
                            2.0 * re_trace_product(s.a12, k * w.w[l]);
    out.users.push_back(make_user(d.adjoint() * a22d, c2, lin, constant, s, state.weights[l]));
  }
  return out;
}

PhaseQuadratics build_quadratics_irs2(const ChannelSet& ch, const PhaseVector& theta1,
                                      const PrecoderSet& w, const SurrogateState& state) {
  check_inputs(ch, w, state);
  if (theta1.size() != ch.m1()) throw std::invalid_argument("theta1 length mismatch");
  const CMat xi = w.xi();
  const CMat t1f1 = theta1.values().asDiagonal() * ch.f1;
  const CMat t = ch.f2 * t1f1 + ch.f3;
  const CMat txi = t * xi;
  const CMat c2 = txi * t.adjoint();

  PhaseQuadratics out;
  for (std::size_t l = 0; l < ch.num_users(); ++l) {
    const UserSurrogate& s = state.users[l];
    const CMat& h = ch.h[l];
    const CMat k = ch.g[l] * t1f1;
    const CMat a22h = s.a22 * h;
    const CVec lin = diag_product(t * w.w[l], s.a12 * h) + diag_product(txi * k.adjoint(), a22h);
    const double constant = re_trace_product(s.a22, k * xi * k.adjoint()) +
                            2.0 * re_trace_product(s.a12, k * w.w[l]);
    out.users.push_back(make_user(h.adjoint() * a22h, c2, lin, constant, s, state.weights[l]));
  }
  return out;
}

double log_sum_exp(std::span<const double> x, double mu) {
  if (x.empty()) throw std::invalid_argument("log_sum_exp: empty input");
  if (!(mu > 0.0)) throw std::invalid_argument("log_sum_exp: mu must be positive");
  const double m = *std::max_element(x.begin(), x.end());
  double s = 0.0;
  for (double v : x) s += std::exp(mu * (v - m));
  return m + std::log(s) / mu;
}

double penalized_objective(const CVec& theta, const PhaseQuadratics& quad, double rho, double mu) {
  if (rho < 0.0 || !(mu > 0.0)) throw std::invalid_argument("penalty needs rho >= 0 and mu > 0");
  const auto x = quad.values(theta);
  double f = 0.0;
  for (std::size_t l = 0; l < x.size(); ++l) f += quad.users[l].weight * x[l];
  if (rho == 0.0) return f;

  double shift = -std::numeric_limits<double>::infinity();
  int count = 0;
  for (std::size_t l = 0; l < x.size(); ++l) {
    if (!quad.users[l].has_qos()) continue;
    shift = std::max(shift, mu * (x[l] - quad.users[l].gamma_tilde));
    ++count;
  }
  if (count == 0) return f;
  double s = 0.0;
  for (std::size_t l = 0; l < x.size(); ++l)
    if (quad.users[l].has_qos()) s += std::exp(mu * (x[l] - quad.users[l].gamma_tilde) - shift);
  return f + rho * (std::exp(shift) * s - count);
}

CVec euclidean_grad(const CVec& theta, const PhaseQuadratics& quad, double rho, double mu) {
  const auto c = coefficients(theta, quad, rho, mu);
  CVec g = CVec::Zero(theta.size());
  for (std::size_t l = 0; l < c.size(); ++l) {
    if (c[l] == 0.0) continue;
    g.noalias() += (2.0 * c[l]) * (quad.users[l].u * theta + quad.users[l].q);
  }
  return g;
}

CVec riemannian_grad(const CVec& theta, const CVec& egrad) {
  if (theta.size() != egrad.size()) throw std::invalid_argument("riemannian_grad: size mismatch");
  const RVec radial = (egrad.array() * theta.array().conjugate()).real();
  return egrad - (radial.array().cast<cd>() * theta.array()).matrix();
}

CVec vector_transport(const CVec& d, const CVec& theta_new) { return riemannian_grad(theta_new, d); }

PhaseVector retract(const PhaseVector& theta, double t, const CVec& d) {
  if (d.size() != theta.size()) throw std::invalid_argument("retract: size mismatch");
  const CVec z = theta.values() + t * d;
  const RVec mag = z.array().abs();
  if (mag.size() && mag.minCoeff() < 1e-14) throw std::domain_error("retract: degenerate step");
  return PhaseVector::normalized(z);
}

double gradient_scale(const CVec& theta, const PhaseQuadratics& quad, double rho, double mu) {
  const auto c = coefficients(theta, quad, rho, mu);
  const double sm = std::sqrt(static_cast<double>(theta.size()));
  double s = 0.0;
  for (std::size_t l = 0; l < c.size(); ++l)
    s += 2.0 * c[l] * (quad.users[l].u.norm() * sm + quad.users[l].q.norm());
  return s;
}

double phase_stationarity_residual(const CVec& theta, const PhaseQuadratics& quad, double rho,
                                   double mu) {
  const double scale = gradient_scale(theta, quad, rho, mu);
  const double g = riemannian_grad(theta, euclidean_grad(theta, quad, rho, mu)).norm();
  return scale > 0.0 ? g / scale : 0.0;
}

double slackness_gamma(const CVec& theta, const PhaseQuadratics& quad) {
  double g = 0.0;
  for (std::size_t l = 0; l < quad.num_users(); ++l)
    if (quad.users[l].has_qos()) g += quad.value(theta, l) - quad.users[l].gamma_tilde;
  return g;
}

double smoothed_slackness(const CVec& theta, const PhaseQuadratics& quad, double mu) {
  if (!(mu > 0.0)) throw std::invalid_argument("smoothed_slackness: mu must be positive");
  std::vector<double> s;
  for (std::size_t l = 0; l < quad.num_users(); ++l)
    if (quad.users[l].has_qos()) s.push_back(quad.value(theta, l) - quad.users[l].gamma_tilde);
  if (s.empty()) return -std::numeric_limits<double>::infinity();
  return log_sum_exp(s, mu) - std::log(static_cast<double>(s.size())) / mu;
}

double slackness_scale(const CVec& theta, const PhaseQuadratics& quad) {
  double s = 0.0;
  for (const PhaseUser& p : quad.users) {
    if (!p.has_qos()) continue;
    const double quadratic = std::abs(theta.dot(p.u * theta));
    const double linear = 2.0 * std::abs(theta.dot(p.q));
    s = std::max(s, quadratic + linear + std::abs(p.gamma_tilde));
  }
  return s;
}

RmoResult rmo_minimize(const PhaseQuadratics& quad, double rho, double mu, const PhaseVector& theta0,
                       const RmoOptions& opt) {
  quad.validate();
  if (theta0.size() != quad.size()) throw std::invalid_argument("rmo_minimize: theta0 length mismatch");
  if (theta0.max_modulus_error() > 1e-12) throw std::invalid_argument("rmo_minimize: theta0 off manifold");

  const Index m = theta0.size();
  RmoResult res;
  PhaseVector th = theta0;
  double f = penalized_objective(th.values(), quad, rho, mu);
  CVec g = riemannian_grad(th.values(), euclidean_grad(th.values(), quad, rho, mu));
  CVec d = -g;
  double t_prev = 0.0;
  res.trace.push_back(f);

  int it = 0;
  for (;; ++it) {
    const double scale = gradient_scale(th.values(), quad, rho, mu);
    const double gn = g.norm();
    res.residual = scale > 0.0 ? gn / scale : 0.0;
    if (gn <= opt.eps_theta * scale) {
      res.converged = true;
      break;
    }
    if (it >= opt.max_iter) break;

    double slope = re_inner(g, d);
    if (!(slope < 0.0)) {
      d = -g;
      slope = -gn * gn;
    }

    bool accepted = false;
    PhaseVector next;
    double f_next = f;
    double t = 0.0;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      const double dmax = d.cwiseAbs().maxCoeff();
      t = t_prev > 0.0 ? std::min(2.0 * t_prev, 10.0 / dmax) : 1.0 / dmax;
      for (int ls = 0; ls < 60; ++ls, t *= opt.backtrack) {
        const CVec z = th.values() + t * d;
        if (z.cwiseAbs().minCoeff() < 1e-14) continue;
        next = PhaseVector::normalized(z);
        f_next = penalized_objective(next.values(), quad, rho, mu);
        if (f_next <= f + opt.armijo_c * t * slope) {
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        // Conjugate direction failed; retry once along steepest descent.
        if (slope == -gn * gn) break;
        d = -g;
        slope = -gn * gn;
        t_prev = 0.0;
      }
    }
    if (!accepted) break;

    const CVec g_old = vector_transport(g, next.values());
    const CVec d_old = vector_transport(d, next.values());
    const double gn_old2 = gn * gn;
    th = std::move(next);
    f = f_next;
    g = riemannian_grad(th.values(), euclidean_grad(th.values(), quad, rho, mu));
    double beta = gn_old2 > 0.0 ? re_inner(g, g - g_old) / gn_old2 : 0.0;
    beta = std::max(beta, 0.0);
    if ((it + 1) % m == 0) beta = 0.0;
    d = -g + beta * d_old;
    t_prev = t;
    res.trace.push_back(f);
  }
  res.iterations = it;
  res.theta = std::move(th);
  return res;
}

const char* to_string(PhaseStatus s) {
  switch (s) {
    case PhaseStatus::unconstrained: return "unconstrained";
    case PhaseStatus::bisected: return "bisected";
    case PhaseStatus::infeasible: return "infeasible";
  }
  return "unknown";
}

PhaseResult optimize_phases(const PhaseQuadratics& quad, const PhaseVector& theta0,
                            const PhaseOptions& opt) {
  quad.validate();
  PhaseResult out;
  out.theta = theta0;

  auto probe = [&](double rho, const PhaseVector& th, int pass) {
    const double g = smoothed_slackness(th.values(), quad, opt.mu);
    out.probes.push_back(
        {rho, g, slackness_gamma(th.values(), quad), pass, slackness_scale(th.values(), quad)});
    return g;
  };
  auto solve = [&](double rho, const PhaseVector& start) {
    RmoResult r = rmo_minimize(quad, rho, opt.mu, start, opt.rmo);
    out.rmo_iterations += r.iterations;
    out.rmo_converged = out.rmo_converged && r.converged;
    return r;
  };

  double f_prev = std::numeric_limits<double>::quiet_NaN();
  PhaseVector th = theta0;
  for (int pass = 0; pass < std::max(1, opt.t_max); ++pass) {
    out.passes = pass + 1;
    RmoResult r0 = solve(0.0, th);
    const double g0 = probe(0.0, r0.theta, pass);

    PhaseVector chosen;
    double rho = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    if (g0 <= 0.0) {
      out.status = PhaseStatus::unconstrained;
      chosen = std::move(r0.theta);
    } else {
      hi = 1.0;
      RmoResult rh = solve(hi, r0.theta);
      double gh = probe(hi, rh.theta, pass);
      int doublings = 0;
      while (gh >= 0.0 && doublings < opt.max_doublings) {
        lo = hi;
        hi *= 2.0;
        rh = solve(hi, rh.theta);
        gh = probe(hi, rh.theta, pass);
        ++doublings;
      }
      if (gh >= 0.0) {
        out.status = PhaseStatus::infeasible;
        chosen = std::move(rh.theta);
        rho = hi;
      } else {
        out.status = PhaseStatus::bisected;
        PhaseVector best = rh.theta;
        PhaseVector cur = rh.theta;
        while (hi - lo >= opt.eps_rho) {
          const double mid = 0.5 * (lo + hi);
          RmoResult rm = solve(mid, cur);
          const double gm = probe(mid, rm.theta, pass);
          cur = rm.theta;
          if (gm >= 0.0) {
            lo = mid;
          } else {
            hi = mid;
            best = rm.theta;
          }
        }
        chosen = std::move(best);
        rho = hi;
      }
    }
    out.theta = chosen;
    out.rho = rho;
    out.rho_lo = lo;
    out.rho_hi = hi;
    th = std::move(chosen);

    const double f = penalized_objective(th.values(), quad, rho, opt.mu);
    if (std::isfinite(f_prev) &&
        std::abs(f - f_prev) <= opt.rmo.eps_theta * std::max(std::abs(f_prev), 1e-300))
      break;
    if (out.status == PhaseStatus::unconstrained) break;
    f_prev = f;
  }
  out.residual = phase_stationarity_residual(out.theta.values(), quad, out.rho, opt.mu);
  return out;
}

PhaseVector project_discrete(const PhaseVector& theta, int q_phi) {
  if (q_phi < 1 || q_phi > 16) throw std::invalid_argument("q_phi must lie in [1, 16]");
  const int levels = 1 << q_phi;
  std::vector<CVec::Scalar> grid(static_cast<std::size_t>(levels));
  for (int k = 0; k < levels; ++k)
    grid[static_cast<std::size_t>(k)] = std::polar(1.0, 2.0 * std::numbers::pi * k / levels);
  std::vector<int> idx(static_cast<std::size_t>(theta.size()));
  for (Index m = 0; m < theta.size(); ++m) {
    int best = 0;
    double best_d = std::abs(theta[m] - grid[0]);
    for (int k = 1; k < levels; ++k) {
      const double dist = std::abs(theta[m] - grid[static_cast<std::size_t>(k)]);
      if (dist < best_d) {
        best_d = dist;
        best = k;
      }
    }
    idx[static_cast<std::size_t>(m)] = best;
  }
  return PhaseVector::discrete(idx, q_phi);
}

}  // namespace irsopt
