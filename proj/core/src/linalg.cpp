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

#include "irsopt/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace irsopt {

namespace {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ (b + 0x632be59bd9b4e019ULL));
  h = splitmix64(h ^ (c + 0x85157af5ULL));
  return h;
}

cd complex_normal(Rng& rng, double variance) {
  std::normal_distribution<double> n01(0.0, 1.0);
  const double s = std::sqrt(variance / 2.0);
  const double re = n01(rng);
  const double im = n01(rng);
  return {s * re, s * im};
}

CVec vec(const CMat& x) { return x.reshaped(); }

CMat unvec(const CVec& v, Index rows, Index cols) {
  if (v.size() != rows * cols) throw std::invalid_argument("unvec: size mismatch");
  return v.reshaped(rows, cols);
}

CMat kron(const CMat& a, const CMat& b) {
  CMat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

CMat hadamard(const CMat& a, const CMat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("hadamard: shape mismatch");
  return a.cwiseProduct(b);
}

CMat hermitian_part(const CMat& a) { return 0.5 * (a + a.adjoint()); }

double logdet_hpd(const CMat& a) {
  Eigen::LLT<CMat> llt(a);
  if (llt.info() != Eigen::Success)
    throw std::domain_error("logdet_hpd: matrix is not positive definite");
  double s = 0.0;
  const auto& l = llt.matrixLLT();
  for (Index i = 0; i < a.rows(); ++i) s += std::log(l(i, i).real());
  return 2.0 * s;
}

CMat solve_hpd(const CMat& a, const CMat& b) {
  Eigen::LLT<CMat> llt(a);
  if (llt.info() != Eigen::Success)
    throw std::domain_error("solve_hpd: matrix is not positive definite");
  return llt.solve(b);
}

cd trace_product(const CMat& a, const CMat& b) {
  if (a.cols() != b.rows() || a.rows() != b.cols())
    throw std::invalid_argument("trace_product: shape mismatch");
  return (a.transpose().cwiseProduct(b)).sum();
}

double re_trace_product(const CMat& a, const CMat& b) { return trace_product(a, b).real(); }

}  // namespace irsopt
