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

#include "irsopt/config_io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace irsopt {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& text) {
  std::size_t used = 0;
  const std::string t = trim(text);
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw std::runtime_error("expected a number, got '" + text + "'");
  }
  if (used != t.size()) throw std::runtime_error("expected a number, got '" + text + "'");
  return v;
}

int parse_int(const std::string& text) {
  const double v = parse_double(text);
  if (v != std::floor(v)) throw std::runtime_error("expected an integer, got '" + text + "'");
  return static_cast<int>(v);
}

Eigen::Vector3d parse_vec3(const std::string& text) {
  const auto v = parse_number_list(text);
  if (v.size() != 3) throw std::runtime_error("expected three coordinates, got '" + text + "'");
  return {v[0], v[1], v[2]};
}

std::string format_vec3(const Eigen::Vector3d& v) {
  std::ostringstream os;
  os << std::setprecision(17) << v.x() << ", " << v.y() << ", " << v.z();
  return os.str();
}

std::string format_grid(ArrayGrid g) { return std::to_string(g.width) + "x" + std::to_string(g.height); }

}  // namespace

std::vector<KeyValue> parse_key_values(std::istream& in) {
  std::vector<KeyValue> out;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("line " + std::to_string(line) + ": expected 'key = value'");
    KeyValue kv{trim(body.substr(0, eq)), trim(body.substr(eq + 1)), line};
    if (kv.key.empty())
      throw std::runtime_error("line " + std::to_string(line) + ": empty key");
    out.push_back(std::move(kv));
  }
  return out;
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::string item;
  std::istringstream is(text);
  while (std::getline(is, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(parse_double(item));
  }
  return out;
}

ArrayGrid parse_grid(const std::string& text) {
  const std::string t = trim(text);
  const auto x = t.find_first_of("xX");
  if (x == std::string::npos) {
    const int n = parse_int(t);
    if (n < 1) throw std::runtime_error("grid size must be >= 1");
    return grid_for_count(n);
  }
  ArrayGrid g{parse_int(t.substr(0, x)), parse_int(t.substr(x + 1))};
  if (g.width < 1 || g.height < 1) throw std::runtime_error("grid dimensions must be >= 1");
  return g;
}

bool parse_bool(const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw std::runtime_error("expected a boolean, got '" + text + "'");
}

ScenarioConfig parse_scenario_config(std::istream& in, ScenarioConfig base) {
  ScenarioConfig c = std::move(base);
  for (const KeyValue& kv : parse_key_values(in)) {
    const std::string& k = kv.key;
    const std::string& v = kv.value;
    try {
      if (k == "tx_position") c.tx_position = parse_vec3(v);
      else if (k == "irs1_position") c.irs1_position = parse_vec3(v);
      else if (k == "irs2_position") c.irs2_position = parse_vec3(v);
      else if (k == "user_circle_center") c.user_circle_center = parse_vec3(v);
      else if (k == "user_circle_radius") c.user_circle_radius = parse_double(v);
      else if (k == "n_tx_grid") c.n_tx_grid = parse_grid(v);
      else if (k == "n_user_grid") c.n_user_grid = parse_grid(v);
      else if (k == "m1_grid") c.m1_grid = parse_grid(v);
      else if (k == "m2_grid") c.m2_grid = parse_grid(v);
      else if (k == "num_users") c.num_users = parse_int(v);
      else if (k == "n_streams") c.n_streams = parse_int(v);
      else if (k == "ps_dbm") c.ps_dbm = parse_double(v);
      else if (k == "noise_dbm") c.noise_dbm = parse_double(v);
      else if (k == "gamma_qos") c.gamma_qos_nats = parse_double(v) * std::numbers::ln2;
      else if (k == "weights") c.weights = (trim(v) == "uniform") ? std::vector<double>{} : parse_number_list(v);
      else if (k == "q_phi") c.q_phi = parse_int(v);
      else if (k == "mu_smooth") c.mu_smooth = parse_double(v);
      else if (k == "n_path") c.n_path = parse_int(v);
      else if (k == "element_spacing_over_lambda") c.element_spacing_over_lambda = parse_double(v);
      else if (k == "los_a_db") c.los.a_db = parse_double(v);
      else if (k == "los_exponent") c.los.exponent = parse_double(v);
      else if (k == "los_shadow_std_db") c.los.shadow_std_db = parse_double(v);
      else if (k == "nlos_a_db") c.nlos.a_db = parse_double(v);
      else if (k == "nlos_exponent") c.nlos.exponent = parse_double(v);
      else if (k == "nlos_shadow_std_db") c.nlos.shadow_std_db = parse_double(v);
      else if (k == "shadowing") c.shadowing = parse_bool(v);
      else if (k == "seed") c.seed = static_cast<std::uint64_t>(std::stoull(trim(v)));
      else throw std::runtime_error("unknown key '" + k + "'");
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error("line " + std::to_string(kv.line) + ": " + e.what());
    } catch (const std::runtime_error& e) {
      throw std::runtime_error("line " + std::to_string(kv.line) + ": " + e.what());
    }
  }
  c.validate();
  return c;
}

ScenarioConfig load_scenario_config(const std::filesystem::path& path, ScenarioConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  return parse_scenario_config(in, std::move(base));
}

void write_scenario_config(std::ostream& out, const ScenarioConfig& c) {
  const auto flags = out.flags();
  const auto prec = out.precision();
  out << std::setprecision(17);
  out << "tx_position = " << format_vec3(c.tx_position) << '\n'
      << "irs1_position = " << format_vec3(c.irs1_position) << '\n'
      << "irs2_position = " << format_vec3(c.irs2_position) << '\n'
      << "user_circle_center = " << format_vec3(c.user_circle_center) << '\n'
      << "user_circle_radius = " << c.user_circle_radius << '\n'
      << "n_tx_grid = " << format_grid(c.n_tx_grid) << '\n'
      << "n_user_grid = " << format_grid(c.n_user_grid) << '\n'
      << "m1_grid = " << format_grid(c.m1_grid) << '\n'
      << "m2_grid = " << format_grid(c.m2_grid) << '\n'
      << "num_users = " << c.num_users << '\n'
      << "n_streams = " << c.n_streams << '\n'
      << "ps_dbm = " << c.ps_dbm << '\n'
      << "noise_dbm = " << c.noise_dbm << '\n'
      << "gamma_qos = " << c.gamma_qos_nats / std::numbers::ln2 << '\n';
  out << "weights = ";
  if (c.weights.empty()) {
    out << "uniform";
  } else {
    for (std::size_t i = 0; i < c.weights.size(); ++i) out << (i ? ", " : "") << c.weights[i];
  }
  out << '\n'
      << "q_phi = " << c.q_phi << '\n'
      << "mu_smooth = " << c.mu_smooth << '\n'
      << "n_path = " << c.n_path << '\n'
      << "element_spacing_over_lambda = " << c.element_spacing_over_lambda << '\n'
      << "los_a_db = " << c.los.a_db << '\n'
      << "los_exponent = " << c.los.exponent << '\n'
      << "los_shadow_std_db = " << c.los.shadow_std_db << '\n'
      << "nlos_a_db = " << c.nlos.a_db << '\n'
      << "nlos_exponent = " << c.nlos.exponent << '\n'
      << "nlos_shadow_std_db = " << c.nlos.shadow_std_db << '\n'
      << "shadowing = " << (c.shadowing ? "true" : "false") << '\n'
      << "seed = " << c.seed << '\n';
  out.flags(flags);
  out.precision(prec);
}

ScenarioConfig reference_profile() { return ScenarioConfig{}; }

ScenarioConfig desk_profile() {
  ScenarioConfig c;
  c.n_tx_grid = {4, 2};
  c.n_user_grid = {2, 2};
  c.m1_grid = {5, 4};
  c.m2_grid = {5, 4};
  c.num_users = 2;
  c.n_streams = 1;
  return c;
}

ScenarioConfig profile_by_name(const std::string& name) {
  if (name == "desk") return desk_profile();
  if (name == "reference") return reference_profile();
  throw std::invalid_argument("unknown profile '" + name + "' (expected desk or reference)");
}

}  // namespace irsopt
