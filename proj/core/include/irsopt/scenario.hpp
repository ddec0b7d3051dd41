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

#include "irsopt/linalg.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace irsopt {

/// Uniform planar array layout: width x height elements.
struct ArrayGrid {
  int width = 1;
  int height = 1;

  [[nodiscard]] int count() const { return width * height; }
  friend bool operator==(const ArrayGrid&, const ArrayGrid&) = default;
};

/// Near-square grid holding exactly n elements (height is the largest divisor <= sqrt(n)).
ArrayGrid grid_for_count(int n);

/// Distance-dependent path loss PL(D) = a + 10 b log10(D) + shadowing.
struct PathLossParams {
  double a_db = 61.4;
  double exponent = 2.0;
  double shadow_std_db = 5.8;
  bool is_los = true;

  static PathLossParams los_28ghz() { return {61.4, 2.0, 5.8, true}; }
  static PathLossParams nlos_28ghz() { return {72.0, 2.92, 8.7, false}; }
};

/// Simulation scenario. Defaults reproduce the reference 28 GHz deployment:
/// Tx at (0,0,10), IRS1 at (0,10,10), IRS2 at (50,10,10), users dropped in a
/// 5 m disk around (50,0,2).
struct ScenarioConfig {
  Eigen::Vector3d tx_position{0.0, 0.0, 10.0};
  Eigen::Vector3d irs1_position{0.0, 10.0, 10.0};
  Eigen::Vector3d irs2_position{50.0, 10.0, 10.0};
  Eigen::Vector3d user_circle_center{50.0, 0.0, 2.0};
  double user_circle_radius = 5.0;

  ArrayGrid n_tx_grid{4, 2};
  ArrayGrid n_user_grid{2, 2};
  ArrayGrid m1_grid{10, 5};
  ArrayGrid m2_grid{10, 5};

  int num_users = 5;
  int n_streams = 8;

  double ps_dbm = 30.0;
  double noise_dbm = -80.0;
  /// Minimum-rate threshold in nats/s/Hz (config files carry bit/s/Hz).
  double gamma_qos_nats = 0.69314718055994530942;
  /// Per-user weights; empty means uniform 1/L.
  std::vector<double> weights;

  int q_phi = 3;
  double mu_smooth = 10.0;
  int n_path = 8;
  double element_spacing_over_lambda = 0.5;

  PathLossParams los = PathLossParams::los_28ghz();
  PathLossParams nlos = PathLossParams::nlos_28ghz();
  bool shadowing = true;

  std::uint64_t seed = 1;

  /// Throws std::invalid_argument on any violated invariant.
  void validate() const;

  [[nodiscard]] double ps_watts() const;
  [[nodiscard]] double noise_watts() const;
  [[nodiscard]] std::vector<double> resolved_weights() const;
  [[nodiscard]] int n_tx() const { return n_tx_grid.count(); }
  [[nodiscard]] int n_user() const { return n_user_grid.count(); }
  [[nodiscard]] int m1() const { return m1_grid.count(); }
  [[nodiscard]] int m2() const { return m2_grid.count(); }
};

double dbm_to_watts(double dbm);

/// The five channel families for one realization. Users share N_U antennas.
struct ChannelSet {
  CMat f1;               ///< Tx -> IRS1, M1 x N_TX
  CMat f2;               ///< IRS1 -> IRS2, M2 x M1
  CMat f3;               ///< Tx -> IRS2, M2 x N_TX
  std::vector<CMat> g;   ///< IRS1 -> user l, N_U x M1
  std::vector<CMat> h;   ///< IRS2 -> user l, N_U x M2
  std::vector<Eigen::Vector3d> user_positions;

  [[nodiscard]] Index n_tx() const { return f1.cols(); }
  [[nodiscard]] Index m1() const { return f1.rows(); }
  [[nodiscard]] Index m2() const { return f3.rows(); }
  [[nodiscard]] std::size_t num_users() const { return g.size(); }

  /// Throws std::invalid_argument if shapes are inconsistent or entries non-finite.
  void validate() const;
};

struct Angles {
  double azimuth = 0.0;
  double elevation = 0.0;
};

/// Azimuth/elevation of the unit direction from \p from toward \p to.
Angles direction_angles(const Eigen::Vector3d& from, const Eigen::Vector3d& to);

/// UPA steering vector; entry m + n*W carries phase 2 pi s (m sin(psi) sin(beta) + n cos(beta)).
CVec upa_response(double azimuth, double elevation, ArrayGrid grid, double spacing);

/// Path loss in dB. \p shadow_db is the shadowing realization (0 for deterministic use).
double path_loss_db(double distance, const PathLossParams& params, double shadow_db = 0.0);

/// Variance of each path gain: kappa^2 10^(-PL/10) with kappa^2 = M_rx N_tx / N_path.
double sv_path_variance(ArrayGrid rx, ArrayGrid tx, int n_path, double pl_db);

struct SvPath {
  cd gain;
  Angles arrival;
  Angles departure;
};

/// Sum over paths of gain * a_r(arrival) a_t(departure)^H.
CMat sv_from_paths(ArrayGrid rx, ArrayGrid tx, double spacing, std::span<const SvPath> paths);

/// Saleh-Valenzuela channel with every path drawn from \p params and uniform
/// random angles (azimuth on [0, 2 pi), elevation on [0, pi)).
CMat gen_sv_channel(ArrayGrid rx, ArrayGrid tx, int n_path, double distance,
                    const PathLossParams& params, Rng& rng, double spacing = 0.5,
                    double shadow_db = 0.0);

/// One link of the deployment: path 0 is the geometric LoS ray, the rest NLoS.
struct LinkSpec {
  ArrayGrid rx;
  ArrayGrid tx;
  Eigen::Vector3d tx_position;
  Eigen::Vector3d rx_position;
  int n_path = 8;
  double spacing = 0.5;
  PathLossParams los;
  PathLossParams nlos;
  bool shadowing = true;
};

/// Draws one link. RNG consumption does not depend on the array sizes, so two
/// configurations differing only in element counts see the same gains and angles.
CMat gen_link_channel(const LinkSpec& link, Rng& rng);

/// Uniform point in the horizontal disk of the scenario.
Eigen::Vector3d sample_user_position(const ScenarioConfig& config, Rng& rng);

/// Places users, then draws F1, F2, F3 and per-user (G_l, H_l) in that order.
/// The Tx-IRS2-IRS1-user path is not modelled.
ChannelSet gen_channel_set(const ScenarioConfig& config, Rng& rng);

}  // namespace irsopt
