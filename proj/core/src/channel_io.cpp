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

#include "irsopt/channel_io.hpp"

#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace irsopt {

namespace {

void write_matrix(std::ostream& out, const std::string& name, const CMat& m) {
  out << "matrix " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      out << (c ? " " : "") << m(r, c).real() << ' ' << m(r, c).imag();
    }
    out << '\n';
  }
}

void expect(std::istream& in, const std::string& word) {
  std::string got;
  if (!(in >> got) || got != word)
    throw std::runtime_error("channel file: expected '" + word + "', got '" + got + "'");
}

CMat read_matrix(std::istream& in, const std::string& name) {
  expect(in, "matrix");
  expect(in, name);
  Index rows = 0;
  Index cols = 0;
  if (!(in >> rows >> cols) || rows < 0 || cols < 0)
    throw std::runtime_error("channel file: bad shape for " + name);
  CMat m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      double re = 0.0;
      double im = 0.0;
      if (!(in >> re >> im)) throw std::runtime_error("channel file: truncated matrix " + name);
      m(r, c) = {re, im};
    }
  }
  return m;
}

}  // namespace

void write_channel_set(std::ostream& out, const ChannelSet& ch) {
  ch.validate();
  const auto flags = out.flags();
  const auto prec = out.precision();
  out << std::setprecision(17);
  out << "irsopt-channels 1\n";
  out << "users " << ch.num_users() << '\n';
  for (std::size_t l = 0; l < ch.num_users(); ++l) {
    const Eigen::Vector3d p =
        l < ch.user_positions.size() ? ch.user_positions[l] : Eigen::Vector3d::Zero();
    out << "position " << l << ' ' << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  }
  write_matrix(out, "F1", ch.f1);
  write_matrix(out, "F2", ch.f2);
  write_matrix(out, "F3", ch.f3);
  for (std::size_t l = 0; l < ch.num_users(); ++l) {
    write_matrix(out, "G" + std::to_string(l), ch.g[l]);
    write_matrix(out, "H" + std::to_string(l), ch.h[l]);
  }
  out.flags(flags);
  out.precision(prec);
}

ChannelSet read_channel_set(std::istream& in) {
  expect(in, "irsopt-channels");
  int version = 0;
  if (!(in >> version) || version != 1) throw std::runtime_error("channel file: unsupported version");
  expect(in, "users");
  int users = 0;
  if (!(in >> users) || users < 1) throw std::runtime_error("channel file: bad user count");
  ChannelSet ch;
  for (int l = 0; l < users; ++l) {
    expect(in, "position");
    int idx = -1;
    Eigen::Vector3d p;
    if (!(in >> idx >> p.x() >> p.y() >> p.z()) || idx != l)
      throw std::runtime_error("channel file: bad position line");
    ch.user_positions.push_back(p);
  }
  ch.f1 = read_matrix(in, "F1");
  ch.f2 = read_matrix(in, "F2");
  ch.f3 = read_matrix(in, "F3");
  for (int l = 0; l < users; ++l) {
    ch.g.push_back(read_matrix(in, "G" + std::to_string(l)));
    ch.h.push_back(read_matrix(in, "H" + std::to_string(l)));
  }
  ch.validate();
  return ch;
}

void save_channel_set(const std::filesystem::path& path, const ChannelSet& channels) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_channel_set(out, channels);
}

ChannelSet load_channel_set(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_channel_set(in);
}

}  // namespace irsopt
