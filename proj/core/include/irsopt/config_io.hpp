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

#include "irsopt/scenario.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace irsopt {

/// One "key = value" entry; \p line is 1-based for error messages.
struct KeyValue {
  std::string key;
  std::string value;
  int line = 0;
};

/// Reads "key = value" lines. Blank lines and text after '#' are ignored.
/// Throws std::runtime_error on a malformed line.
std::vector<KeyValue> parse_key_values(std::istream& in);

std::vector<double> parse_number_list(const std::string& text);
ArrayGrid parse_grid(const std::string& text);
bool parse_bool(const std::string& text);

/// Applies config-file entries on top of \p base. Unknown keys are rejected.
/// gamma_qos is read in bit/s/Hz and stored in nats. The result is validated.
ScenarioConfig parse_scenario_config(std::istream& in, ScenarioConfig base = {});
ScenarioConfig load_scenario_config(const std::filesystem::path& path, ScenarioConfig base = {});

/// Writes every field in the same key = value format parse_scenario_config reads.
void write_scenario_config(std::ostream& out, const ScenarioConfig& config);

/// Reference deployment (5 users, 8 streams, 10x5 elements per IRS).
ScenarioConfig reference_profile();

/// Reduced deployment for CI: N_TX = 8, N_U = 4, M1 = M2 = 20, L = 2, one stream.
ScenarioConfig desk_profile();

ScenarioConfig profile_by_name(const std::string& name);

}  // namespace irsopt
