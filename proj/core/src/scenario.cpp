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

#include "irsopt/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace irsopt {

ArrayGrid grid_for_count(int n) {
  if (n < 1) throw std::invalid_argument("grid_for_count: n must be >= 1");
  int h = static_cast<int>(std::sqrt(static_cast<double>(n)));
  while (h > 1 && n % h != 0) --h;
  return {n / h, h};
}

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

void ScenarioConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("ScenarioConfig: ") + what);
  };
  for (const ArrayGrid* g : {&n_tx_grid, &n_user_grid, &m1_grid, &m2_grid})
    require(g->width >= 1 && g->height >= 1, "array grids need at least one element");
  require(num_users >= 1, "num_users must be >= 1");
  require(n_streams >= 1, "n_streams must be >= 1");
  require(n_path >= 1, "n_path must be >= 1");
  require(q_phi >= 1, "q_phi must be >= 1");
  require(user_circle_radius > 0.0, "user_circle_radius must be positive");
  require(std::isfinite(ps_dbm), "ps_dbm must be finite");
  require(std::isfinite(noise_dbm), "noise_dbm must be finite");
  require(mu_smooth > 0.0, "mu_smooth must be positive");
  require(gamma_qos_nats >= 0.0, "gamma_qos must be nonnegative");
  require(element_spacing_over_lambda > 0.0, "element spacing must be positive");
  require(los.exponent > 0.0 && nlos.exponent > 0.0, "path-loss exponent must be positive");
  require(los.shadow_std_db >= 0.0 && nlos.shadow_std_db >= 0.0,
          "shadowing std-dev must be nonnegative");
  if (!weights.empty()) {
    require(static_cast<int>(weights.size()) == num_users, "one weight per user required");
    double sum = 0.0;
    for (double w : weights) {
      require(w >= 0.0, "weights must be nonnegative");
      sum += w;
    }
    require(std::abs(sum - 1.0) <= 1e-12, "weights must sum to 1");
  }
}

double ScenarioConfig::ps_watts() const { return dbm_to_watts(ps_dbm); }
double ScenarioConfig::noise_watts() const { return dbm_to_watts(noise_dbm); }

std::vector<double> ScenarioConfig::resolved_weights() const {
  if (!weights.empty()) return weights;
  return std::vector<double>(static_cast<std::size_t>(num_users), 1.0 / num_users);
}

void ChannelSet::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("ChannelSet: ") + what);
  };
  require(f2.rows() == f3.rows() && f2.cols() == f1.rows(), "F2 must be M2 x M1");
  require(f3.cols() == f1.cols(), "F3 must be M2 x N_TX");
  require(g.size() == h.size() && !g.empty(), "need one G and one H per user");
  for (std::size_t l = 0; l < g.size(); ++l) {
    require(g[l].cols() == f1.rows(), "G_l must have M1 columns");
    require(h[l].cols() == f3.rows(), "H_l must have M2 columns");
    require(g[l].rows() == h[l].rows(), "G_l and H_l must share N_U rows");
    require(g[l].allFinite() && h[l].allFinite(), "non-finite user channel");
  }
  require(f1.allFinite() && f2.allFinite() && f3.allFinite(), "non-finite channel entry");
}

Angles direction_angles(const Eigen::Vector3d& from, const Eigen::Vector3d& to) {
  const Eigen::Vector3d d = to - from;
  const double n = d.norm();
  if (n <= 0.0) throw std::invalid_argument("direction_angles: coincident points");
  const Eigen::Vector3d u = d / n;
  return {std::atan2(u.y(), u.x()), std::acos(std::clamp(u.z(), -1.0, 1.0))};
}

CVec upa_response(double azimuth, double elevation, ArrayGrid grid, double spacing) {
  if (grid.width < 1 || grid.height < 1)
    throw std::invalid_argument("upa_response: grid dimensions must be >= 1");
  if (!(spacing > 0.0)) throw std::invalid_argument("upa_response: spacing must be positive");
  const double k = 2.0 * std::numbers::pi * spacing;
  const double horiz = std::sin(azimuth) * std::sin(elevation);
  const double vert = std::cos(elevation);
  const double scale = 1.0 / std::sqrt(static_cast<double>(grid.count()));
  CVec a(grid.count());
  for (int n = 0; n < grid.height; ++n)
    for (int m = 0; m < grid.width; ++m)
      a(m + n * grid.width) = scale * std::polar(1.0, k * (m * horiz + n * vert));
  return a;
}

double path_loss_db(double distance, const PathLossParams& params, double shadow_db) {
  if (!(distance > 0.0)) throw std::invalid_argument("path_loss_db: distance must be positive");
  return params.a_db + 10.0 * params.exponent * std::log10(distance) + shadow_db;
}

double sv_path_variance(ArrayGrid rx, ArrayGrid tx, int n_path, double pl_db) {
  const double kappa2 = static_cast<double>(rx.count()) * tx.count() / n_path;
  return kappa2 * std::pow(10.0, -0.1 * pl_db);
}

CMat sv_from_paths(ArrayGrid rx, ArrayGrid tx, double spacing, std::span<const SvPath> paths) {
  CMat out = CMat::Zero(rx.count(), tx.count());
  for (const SvPath& p : paths) {
    const CVec ar = upa_response(p.arrival.azimuth, p.arrival.elevation, rx, spacing);
    const CVec at = upa_response(p.departure.azimuth, p.departure.elevation, tx, spacing);
    out.noalias() += p.gain * ar * at.adjoint();
  }
  return out;
}

namespace {

Angles random_angles(Rng& rng) {
  std::uniform_real_distribution<double> az(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> el(0.0, std::numbers::pi);
  const double a = az(rng);
  const double e = el(rng);
  return {a, e};
}

}  // namespace

CMat gen_sv_channel(ArrayGrid rx, ArrayGrid tx, int n_path, double distance,
                    const PathLossParams& params, Rng& rng, double spacing, double shadow_db) {
  if (n_path < 1) throw std::invalid_argument("gen_sv_channel: n_path must be >= 1");
  const double var = sv_path_variance(rx, tx, n_path, path_loss_db(distance, params, shadow_db));
  std::vector<SvPath> paths;
  paths.reserve(static_cast<std::size_t>(n_path));
  for (int q = 0; q < n_path; ++q) {
    SvPath p;
    p.gain = complex_normal(rng, var);
    p.arrival = random_angles(rng);
    p.departure = random_angles(rng);
    paths.push_back(p);
  }
  return sv_from_paths(rx, tx, spacing, paths);
}

CMat gen_link_channel(const LinkSpec& link, Rng& rng) {
  if (link.n_path < 1) throw std::invalid_argument("gen_link_channel: n_path must be >= 1");
  const double distance = (link.rx_position - link.tx_position).norm();
  std::normal_distribution<double> n01(0.0, 1.0);
  // One shadowing realization per link, scaled by each path class's std-dev.
  const double z = n01(rng);
  const double shadow_los = link.shadowing ? z * link.los.shadow_std_db : 0.0;
  const double shadow_nlos = link.shadowing ? z * link.nlos.shadow_std_db : 0.0;
  const double var_los =
      sv_path_variance(link.rx, link.tx, link.n_path, path_loss_db(distance, link.los, shadow_los));
  const double var_nlos = sv_path_variance(link.rx, link.tx, link.n_path,
                                           path_loss_db(distance, link.nlos, shadow_nlos));

  std::vector<SvPath> paths;
  paths.reserve(static_cast<std::size_t>(link.n_path));
  SvPath los;
  los.gain = complex_normal(rng, var_los);
  los.departure = direction_angles(link.tx_position, link.rx_position);
  los.arrival = direction_angles(link.rx_position, link.tx_position);
  paths.push_back(los);
  for (int q = 1; q < link.n_path; ++q) {
    SvPath p;
    p.gain = complex_normal(rng, var_nlos);
    p.arrival = random_angles(rng);
    p.departure = random_angles(rng);
    paths.push_back(p);
  }
  return sv_from_paths(link.rx, link.tx, link.spacing, paths);
}

Eigen::Vector3d sample_user_position(const ScenarioConfig& config, Rng& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double r = config.user_circle_radius * std::sqrt(u01(rng));
  const double phi = 2.0 * std::numbers::pi * u01(rng);
  return config.user_circle_center + Eigen::Vector3d(r * std::cos(phi), r * std::sin(phi), 0.0);
}

ChannelSet gen_channel_set(const ScenarioConfig& config, Rng& rng) {
  config.validate();
  ChannelSet set;
  for (int l = 0; l < config.num_users; ++l)
    set.user_positions.push_back(sample_user_position(config, rng));

  auto link = [&](ArrayGrid rx, const Eigen::Vector3d& rx_pos, ArrayGrid tx,
                  const Eigen::Vector3d& tx_pos) {
    LinkSpec spec{rx,           tx,       tx_pos,   rx_pos, config.n_path,
                  config.element_spacing_over_lambda, config.los, config.nlos, config.shadowing};
    return gen_link_channel(spec, rng);
  };

  set.f1 = link(config.m1_grid, config.irs1_position, config.n_tx_grid, config.tx_position);
  set.f2 = link(config.m2_grid, config.irs2_position, config.m1_grid, config.irs1_position);
  set.f3 = link(config.m2_grid, config.irs2_position, config.n_tx_grid, config.tx_position);
  for (int l = 0; l < config.num_users; ++l) {
    const auto& pos = set.user_positions[static_cast<std::size_t>(l)];
    set.g.push_back(link(config.n_user_grid, pos, config.m1_grid, config.irs1_position));
    set.h.push_back(link(config.n_user_grid, pos, config.m2_grid, config.irs2_position));
  }
  return set;
}

}  // namespace irsopt
