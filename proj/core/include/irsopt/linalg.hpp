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

#include <Eigen/Dense>

#include <complex>
#include <random>

namespace irsopt {

using cd = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using Index = Eigen::Index;

/// Random engine used for every stochastic draw in the library.
using Rng = std::mt19937_64;

/// Mixes a master seed with stream identifiers into an independent seed
/// (splitmix64 finalizer applied per component).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

/// Circularly symmetric complex Gaussian draw with E|z|^2 = variance.
cd complex_normal(Rng& rng, double variance);

/// Column-stacking vectorization.
CVec vec(const CMat& x);

/// Inverse of vec() for a rows x cols matrix.
CMat unvec(const CVec& v, Index rows, Index cols);

CMat kron(const CMat& a, const CMat& b);

CMat hadamard(const CMat& a, const CMat& b);

/// (A + A^H) / 2
CMat hermitian_part(const CMat& a);

/// ln|A| for a Hermitian positive-definite matrix (Cholesky based).
/// Throws std::domain_error when A is not numerically positive definite.
double logdet_hpd(const CMat& a);

/// Solves A X = B for Hermitian positive-definite A.
CMat solve_hpd(const CMat& a, const CMat& b);

/// Real part of the trace of A * B, computed without forming the product.
double re_trace_product(const CMat& a, const CMat& b);

/// Trace of A * B, computed without forming the product.
cd trace_product(const CMat& a, const CMat& b);

}  // namespace irsopt
