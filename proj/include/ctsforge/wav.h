// ctsforge/wav.h

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

#ifndef CTSFORGE_WAV_H_
#define CTSFORGE_WAV_H_

#include <filesystem>

#include <Eigen/Core>

namespace ctsforge {

inline constexpr int kTelephoneRate = 8000;

/// Mono audio with amplitudes in [-1, 1].
struct Waveform {
  Eigen::VectorXd samples;
  int sample_rate = kTelephoneRate;

  Eigen::Index size() const { return samples.size(); }
  double duration() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

/// Reads 16-bit PCM mono WAV at 8 kHz. Anything else is rejected with
/// std::runtime_error; there is no resampling.
Waveform read_wav(const std::filesystem::path& path);

/// Writes 16-bit PCM mono. Samples are clipped to [-1, 1] and rounded.
void write_wav(const std::filesystem::path& path, const Waveform& wave);

}  // namespace ctsforge

#endif  // CTSFORGE_WAV_H_
