// fmat.cc

// Copyright 2026 The ctsforge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "ctsforge/fmat.h"

#include <fstream>
#include <limits>
#include <stdexcept>

#include "ctsforge/binary_io.h"

namespace ctsforge {

void write_fmat(std::ostream& out, const Eigen::MatrixXd& m) {
  constexpr auto kMax = std::numeric_limits<std::uint32_t>::max();
  if (m.rows() > kMax || m.cols() > kMax)
    throw std::invalid_argument("matrix too large for FMAT");
  write_magic(out, "FMAT");
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
  write_matrix_data<float>(out, m);
}

void write_fmat(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_fmat(out, m);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Eigen::MatrixXd read_fmat(std::istream& in) {
  expect_magic(in, "FMAT");
  auto rows = read_le<std::uint32_t>(in);
  auto cols = read_le<std::uint32_t>(in);
  Eigen::MatrixXd m(rows, cols);
  read_matrix_data<float>(in, m);
  return m;
}

Eigen::MatrixXd read_fmat(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return read_fmat(in);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

}  // namespace ctsforge
