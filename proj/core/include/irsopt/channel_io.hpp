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

namespace irsopt {

/// Plain-text channel dump. Layout:
///
///     irsopt-channels 1
///     users L
///     position <l> <x> <y> <z>        (L lines)
///     matrix <name> <rows> <cols>     (name is F1, F2, F3, G<l> or H<l>)
///     <re> <im> <re> <im> ...          (one line per row)
///
/// Values are written with 17 significant digits, so a dump/load cycle is exact.
void write_channel_set(std::ostream& out, const ChannelSet& channels);
ChannelSet read_channel_set(std::istream& in);

void save_channel_set(const std::filesystem::path& path, const ChannelSet& channels);
ChannelSet load_channel_set(const std::filesystem::path& path);

}  // namespace irsopt
