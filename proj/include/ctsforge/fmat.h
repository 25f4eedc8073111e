// ctsforge/fmat.h

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

// FMAT: "FMAT", u32 rows, u32 cols, rows*cols float32, row-major, all
// little-endian. Used for feature matrices and embedding archives.

#ifndef CTSFORGE_FMAT_H_
#define CTSFORGE_FMAT_H_

#include <filesystem>
#include <iosfwd>

#include <Eigen/Core>

namespace ctsforge {

void write_fmat(std::ostream& out, const Eigen::MatrixXd& m);
void write_fmat(const std::filesystem::path& path, const Eigen::MatrixXd& m);

Eigen::MatrixXd read_fmat(std::istream& in);
Eigen::MatrixXd read_fmat(const std::filesystem::path& path);

}  // namespace ctsforge

#endif  // CTSFORGE_FMAT_H_
