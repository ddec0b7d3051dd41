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

#include "irsopt/precoder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace irsopt {

namespace {

constexpr double kTiny = 1e-300;
constexpr double kNullEig = 1e-12;
constexpr double kNullLeak = 1e-10;

std::vector<double> multipliers(const QcqpProblem& p, const DualState& d) {
  std::vector<double> c(p.num_users());
  for (std::size_t l = 0; l < c.size(); ++l) c[l] = p.users[l].weight + d.u[l];
  return c;
}

/// Hessian block seen by user j: sum_l c_l P_l (coupled) or c_j P_j (per user).
std::vector<CMat> hessian_blocks(const QcqpProblem& p, const std::vector<double>& c) {
  std::vector<CMat> out;
  if (p.form == QcqpForm::coupled) {
    CMat m = CMat::Zero(p.n_tx(), p.n_tx());
    for (std::size_t l = 0; l < p.num_users(); ++l) m += c[l] * p.users[l].quad;
    out.assign(1, hermitian_part(m));
  } else {
    for (std::size_t l = 0; l < p.num_users(); ++l) out.push_back(hermitian_part(c[l] * p.users[l].quad));
  }
  return out;
}

const CMat& block_for(const std::vector<CMat>& blocks, std::size_t j) {
  return blocks.size() == 1 ? blocks.front() : blocks[j];
}

double spectral_norm_hpd(const CMat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<CMat> es(m, Eigen::EigenvaluesOnly);
  return std::max(std::abs(es.eigenvalues().minCoeff()), std::abs(es.eigenvalues().maxCoeff()));
}

struct Spectral {
  RVec lambda;
  CMat basis;
};

/// Lagrangian value for (W, duals); its maximum over u0 is the dual function.
double lagrangian(const QcqpProblem& p, const PrecoderSet& w, const DualState& d) {
  double v = d.u0 * (w.total_power() - p.ps);
  for (std::size_t l = 0; l < p.num_users(); ++l) {
    const QcqpUser& u = p.users[l];
    const double gl = p.g(w, l);
    v += u.weight * gl;
    if (u.has_qos()) v += d.u[l] * (gl - u.gamma_tilde);
  }
  return v;
}

/// Maximizer of g^T d - d^T N d / 2 subject to u + d >= 0, by enumerating which
/// coordinates sit on the bound (the model is strictly concave after regularization).
RVec box_newton_step(Eigen::MatrixXd n, const RVec& g, const RVec& u) {
  const Index k = g.size();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(n, Eigen::EigenvaluesOnly);
  const double top = std::max(es.eigenvalues().cwiseAbs().maxCoeff(), kTiny);
  const double floor = 1e-10 * top;
  if (es.eigenvalues().minCoeff() < floor)
    n.diagonal().array() += floor - es.eigenvalues().minCoeff();

  auto model = [&](const RVec& d) { return g.dot(d) - 0.5 * d.dot(n * d); };
  RVec best = RVec::Zero(k);
  double best_val = 0.0;
  if (k > 12) {
    // Too many faces to enumerate: clipped Newton step.
    best = (n.ldlt().solve(g)).cwiseMax(-u);
    return best;
  }
  for (unsigned mask = 0; mask < (1u << k); ++mask) {
    RVec d = RVec::Zero(k);
    std::vector<Index> f;
    for (Index i = 0; i < k; ++i) {
      if (mask & (1u << i)) d(i) = -u(i);
      else f.push_back(i);
    }
    if (!f.empty()) {
      const Index nf = static_cast<Index>(f.size());
      Eigen::MatrixXd nff(nf, nf);
      RVec rhs(nf);
      for (Index a = 0; a < nf; ++a) {
        rhs(a) = g(f[a]);
        for (Index b = 0; b < k; ++b)
          if (mask & (1u << b)) rhs(a) -= n(f[a], b) * d(b);
        for (Index b = 0; b < nf; ++b) nff(a, b) = n(f[a], f[b]);
      }
      const RVec df = nff.ldlt().solve(rhs);
      bool feasible = df.allFinite();
      for (Index a = 0; a < nf && feasible; ++a) {
        if (u(f[a]) + df(a) < 0.0) feasible = false;
        d(f[a]) = df(a);
      }
      if (!feasible) continue;
    }
    const double v = model(d);
    if (v > best_val) {
      best_val = v;
      best = d;
    }
  }
  return best;
}

}  // namespace

const char* to_string(QcqpStatus s) {
  switch (s) {
    case QcqpStatus::converged: return "converged";
    case QcqpStatus::iteration_cap: return "iteration_cap";
    case QcqpStatus::infeasible: return "infeasible";
  }
  return "unknown";
}

CMat QcqpUser::v_mat() const { return kron(CMat::Identity(lin.cols(), lin.cols()), quad); }

CVec QcqpUser::v_vec() const { return vec(lin); }

double QcqpKkt::max() const {
  return std::max({stationarity, power_slackness, qos_slackness, primal});
}

void QcqpProblem::validate() const {
  if (users.empty()) throw std::invalid_argument("QCQP needs at least one user");
  if (!(ps > 0.0)) throw std::invalid_argument("QCQP power budget must be positive");
  for (const QcqpUser& u : users) {
    if (u.quad.rows() != n_tx() || u.quad.cols() != n_tx() || u.lin.rows() != n_tx())
      throw std::invalid_argument("QCQP user blocks must have N_TX rows");
    if (u.weight < 0.0) throw std::invalid_argument("QCQP weights must be non-negative");
  }
}

double QcqpProblem::g_quadratic(const PrecoderSet& w, std::size_t l) const {
  const QcqpUser& u = users.at(l);
  if (form == QcqpForm::coupled) return re_trace_product(u.quad, w.xi());
  return re_trace_product(w.w[l].adjoint() * u.quad, w.w[l]);
}

double QcqpProblem::g(const PrecoderSet& w, std::size_t l) const {
  const QcqpUser& u = users.at(l);
  return g_quadratic(w, l) + 2.0 * re_trace_product(u.lin.adjoint(), w.w[l]);
}

double QcqpProblem::objective(const PrecoderSet& w) const {
  double v = 0.0;
  for (std::size_t l = 0; l < users.size(); ++l) v += users[l].weight * g(w, l);
  return v;
}

QcqpProblem build_qcqp(const SurrogateState& state, std::span<const CMat> hbar, double ps,
                       QcqpForm form) {
  if (hbar.size() != state.num_users())
    throw std::invalid_argument("build_qcqp: one effective channel per user required");
  QcqpProblem p;
  p.ps = ps;
  p.form = form;
  for (std::size_t l = 0; l < hbar.size(); ++l) {
    const UserSurrogate& s = state.users[l];
    if (s.a22.rows() != hbar[l].rows()) throw std::invalid_argument("build_qcqp: N_U mismatch");
    QcqpUser u;
    u.quad = hermitian_part(hbar[l].adjoint() * s.a22 * hbar[l]);
    u.lin = (s.a12 * hbar[l]).adjoint();
    u.weight = state.weights[l];
    u.gamma_tilde = s.gamma_tilde;
    p.users.push_back(std::move(u));
  }
  p.validate();
  return p;
}

PrecoderSet qcqp_primal(const QcqpProblem& p, DualState& d, int* null_space_drops) {
  const std::size_t L = p.num_users();
  if (d.u.size() != L) d.u.assign(L, 0.0);
  const auto c = multipliers(p, d);
  const auto blocks = hessian_blocks(p, c);

  std::vector<Spectral> spec;
  for (const CMat& m : blocks) {
    Eigen::SelfAdjointEigenSolver<CMat> es(m);
    spec.push_back({es.eigenvalues().cwiseMax(0.0), es.eigenvectors()});
  }

  // Coefficients of -c_j lin_j in the eigenbasis; exact null-space leakage is dropped.
  std::vector<CMat> proj(L);
  std::vector<std::vector<bool>> keep(L);
  int drops = 0;
  for (std::size_t j = 0; j < L; ++j) {
    const Spectral& s = spec[blocks.size() == 1 ? 0 : j];
    proj[j] = c[j] * (s.basis.adjoint() * p.users[j].lin);
    const double lmax = s.lambda.size() ? s.lambda.maxCoeff() : 0.0;
    const double scale = c[j] * p.users[j].lin.norm();
    keep[j].assign(static_cast<std::size_t>(s.lambda.size()), true);
    for (Index k = 0; k < s.lambda.size(); ++k) {
      if (s.lambda(k) <= kNullEig * lmax && proj[j].row(k).norm() <= kNullLeak * scale) {
        keep[j][static_cast<std::size_t>(k)] = false;
        ++drops;
      }
    }
  }
  if (null_space_drops) *null_space_drops = drops;

  auto power = [&](double u0) {
    double pw = 0.0;
    for (std::size_t j = 0; j < L; ++j) {
      const Spectral& s = spec[blocks.size() == 1 ? 0 : j];
      for (Index k = 0; k < s.lambda.size(); ++k) {
        if (!keep[j][static_cast<std::size_t>(k)]) continue;
        const double num = proj[j].row(k).squaredNorm();
        if (num == 0.0) continue;
        const double den = s.lambda(k) + u0;
        if (den <= 0.0) return std::numeric_limits<double>::infinity();
        pw += num / (den * den);
      }
    }
    return pw;
  };

  double u0 = 0.0;
  if (power(0.0) > p.ps) {
    double total = 0.0;
    for (std::size_t j = 0; j < L; ++j) total += proj[j].squaredNorm();
    double lo = 0.0;
    double hi = std::sqrt(total / p.ps);
    while (power(hi) > p.ps) hi *= 2.0;  // guards rounding in the analytic bound
    for (int it = 0; it < 300 && hi - lo > 1e-15 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (power(mid) > p.ps ? lo : hi) = mid;
    }
    u0 = hi;
  }
  d.u0 = u0;

  PrecoderSet w;
  w.w.resize(L);
  for (std::size_t j = 0; j < L; ++j) {
    const Spectral& s = spec[blocks.size() == 1 ? 0 : j];
    CMat coef = proj[j];
    for (Index k = 0; k < s.lambda.size(); ++k) {
      const bool kept = keep[j][static_cast<std::size_t>(k)];
      const double den = s.lambda(k) + u0;
      coef.row(k) *= (kept && den > 0.0) ? -1.0 / den : 0.0;
    }
    w.w[j] = s.basis * coef;
  }
  return w;
}

QcqpKkt qcqp_kkt(const QcqpProblem& p, const PrecoderSet& w, const DualState& d) {
  p.validate();
  if (w.size() != p.num_users() || d.u.size() != p.num_users())
    throw std::invalid_argument("qcqp_kkt: size mismatch");
  QcqpKkt k;
  const auto c = multipliers(p, d);
  const auto blocks = hessian_blocks(p, c);
  for (std::size_t j = 0; j < p.num_users(); ++j) {
    const CMat& m = block_for(blocks, j);
    const double mn = spectral_norm_hpd(m);
    const CMat r = (m * w.w[j] + d.u0 * w.w[j]) + c[j] * p.users[j].lin;
    const double scale = (mn + d.u0) * w.w[j].norm() + c[j] * p.users[j].lin.norm();
    if (scale > kTiny) k.stationarity = std::max(k.stationarity, r.norm() / scale);
    if (j == 0 || blocks.size() > 1) {
      const double pw = w.total_power();
      const double ratio = d.u0 > 0.0 ? d.u0 / (d.u0 + mn) : 0.0;
      k.power_slackness = std::max(k.power_slackness, ratio * std::abs(pw - p.ps) / p.ps);
      k.primal = std::max(k.primal, std::max(0.0, pw - p.ps) / p.ps);
    }
  }
  for (std::size_t l = 0; l < p.num_users(); ++l) {
    const QcqpUser& u = p.users[l];
    if (!u.has_qos()) continue;
    const double quad = p.g_quadratic(w, l);
    const double lin = p.g(w, l) - quad;
    const double s = std::abs(quad) + std::abs(lin) + std::abs(u.gamma_tilde) + kTiny;
    const double slack = quad + lin - u.gamma_tilde;
    const double ratio = d.u[l] > 0.0 ? d.u[l] / (d.u[l] + u.weight) : 0.0;
    k.qos_slackness = std::max(k.qos_slackness, ratio * std::abs(slack) / s);
    k.primal = std::max(k.primal, std::max(0.0, slack) / s);
  }
  return k;
}

QcqpSolution solve_qcqp(const QcqpProblem& p, const QcqpOptions& opt, const DualState* warm) {
  p.validate();
  const std::size_t L = p.num_users();
  std::vector<std::size_t> qos;
  for (std::size_t l = 0; l < L; ++l)
    if (p.users[l].has_qos()) qos.push_back(l);

  DualState d;
  d.u.assign(L, 0.0);
  if (warm && warm->u.size() == L)
    for (std::size_t l : qos) d.u[l] = std::max(0.0, warm->u[l]);

  double wmax = 0.0;
  for (const QcqpUser& u : p.users) wmax = std::max(wmax, u.weight);
  wmax = std::max(wmax, 1e-12);

  struct Eval {
    DualState d;
    PrecoderSet w;
    double phi = 0.0;
    RVec grad;
    int drops = 0;
  };
  auto evaluate = [&](const DualState& in) {
    Eval e;
    e.d = in;
    e.w = qcqp_primal(p, e.d, &e.drops);
    e.phi = lagrangian(p, e.w, e.d);
    e.grad.resize(static_cast<Index>(qos.size()));
    for (std::size_t i = 0; i < qos.size(); ++i)
      e.grad(static_cast<Index>(i)) = p.g(e.w, qos[i]) - p.users[qos[i]].gamma_tilde;
    return e;
  };

  QcqpSolution sol;
  Eval cur = evaluate(d);
  int it = 0;
  sol.status = QcqpStatus::iteration_cap;
  for (;; ++it) {
    const QcqpKkt kkt = qcqp_kkt(p, cur.w, cur.d);
    if (kkt.max() <= opt.tol) {
      sol.status = QcqpStatus::converged;
      break;
    }
    if (qos.empty() || it >= opt.max_dual_iterations) break;
    double umax = 0.0;
    for (std::size_t l : qos) umax = std::max(umax, cur.d.u[l]);
    if (umax > opt.infeasible_dual * wmax && kkt.primal > opt.tol) {
      sol.status = QcqpStatus::infeasible;
      break;
    }

    // Newton model q(d) = g^T d - d^T N d / 2 with a finite-difference N,
    // maximized over the box u + d >= 0.
    const Index nq = static_cast<Index>(qos.size());
    Eigen::MatrixXd hess(nq, nq);
    for (Index a = 0; a < nq; ++a) {
      const std::size_t l = qos[static_cast<std::size_t>(a)];
      const double h = 1e-6 * (cur.d.u[l] + p.users[l].weight + 1e-12);
      DualState probe = cur.d;
      probe.u[l] += h;
      const Eval e = evaluate(probe);
      hess.col(a) = (e.grad - cur.grad) / h;
    }
    RVec ucur(nq);
    for (Index a = 0; a < nq; ++a) ucur(a) = cur.d.u[qos[static_cast<std::size_t>(a)]];
    RVec step = box_newton_step(-0.5 * (hess + hess.transpose()), cur.grad, ucur);
    if (!step.allFinite() || !(step.dot(cur.grad) > 0.0)) {
      // Flat dual (no usable curvature, e.g. an unreachable target): expanding ascent step.
      RVec asc = cur.grad;
      for (Index a = 0; a < nq; ++a)
        if (ucur(a) <= 0.0 && asc(a) < 0.0) asc(a) = 0.0;
      if (!(asc.norm() > 0.0)) break;
      step = (2.0 * std::max(ucur.norm(), wmax) / asc.norm()) * asc;
    }

    bool accepted = false;
    double t = 1.0;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      DualState trial = cur.d;
      double pred = 0.0;
      for (Index a = 0; a < nq; ++a) {
        const std::size_t l = qos[static_cast<std::size_t>(a)];
        trial.u[l] = std::max(0.0, cur.d.u[l] + t * step(a));
        pred += cur.grad(a) * (trial.u[l] - cur.d.u[l]);
      }
      Eval e = evaluate(trial);
      const double slack = 1e-14 * (std::abs(cur.phi) + kTiny);
      if (e.phi >= cur.phi + 1e-4 * pred - slack) {
        cur = std::move(e);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }

  sol.w = std::move(cur.w);
  sol.dual = std::move(cur.d);
  sol.dual_iterations = it;
  sol.null_space_drops = cur.drops;
  sol.kkt = qcqp_kkt(p, sol.w, sol.dual);
  if (sol.status != QcqpStatus::converged && sol.status != QcqpStatus::infeasible &&
      sol.kkt.max() <= opt.tol)
    sol.status = QcqpStatus::converged;
  sol.objective = p.objective(sol.w);
  return sol;
}

}  // namespace irsopt
