// ctsforge/dsp.h

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

// Front end: energy SAD, log-mel spectrogram, sliding-window mean
// subtraction and non-speech frame dropping.

#ifndef CTSFORGE_DSP_H_
#define CTSFORGE_DSP_H_

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ctsforge/corpus.h"
#include "ctsforge/wav.h"

namespace ctsforge {

struct FrameSpec {
  double frame_len_ms = 25.0;
  double frame_shift_ms = 10.0;
  int n_mels = 64;
  double fmin = 80.0;
  double fmax = 3800.0;
  double preemphasis = 0.97;
  double floor_eps = 1e-10;  // on filterbank energies, before the log

  Eigen::Index frame_length(int sample_rate) const;
  Eigen::Index frame_step(int sample_rate) const;
  /// Throws std::invalid_argument when the spec is unusable at this rate.
  void check(int sample_rate) const;
};

/// floor((N - L) / S) + 1, or 0 when N < L.
Eigen::Index num_frames(Eigen::Index n_samples, Eigen::Index frame_length,
                        Eigen::Index frame_step);

/// T x F log-mel frames. F equals the n_mels it was computed with.
struct FeatureMatrix {
  Eigen::MatrixXd values;
  double frame_shift_ms = 10.0;

  Eigen::Index frames() const { return values.rows(); }
  Eigen::Index dims() const { return values.cols(); }
};

struct SadMarks {
  std::vector<bool> speech;  // one decision per frame

  std::size_t size() const { return speech.size(); }
  std::size_t count() const;
};

struct SadParams {
  double frame_len_ms = 25.0;
  double frame_shift_ms = 10.0;
  // Noise floor: this quantile of frame log-energies, capped at
  // noise_ceiling_db so that a uniformly loud signal is not taken for noise.
  double floor_quantile = 0.1;
  double noise_ceiling_db = -40.0;
  double margin_db = 12.0;
  double absolute_floor_db = -55.0;  // dB re. unit mean square
  int median_width = 5;
};

/// Frame log-energy against max(noise floor + margin, absolute floor), then
/// a median filter over median_width frames.
SadMarks detect_speech(const Waveform& w, const SadParams& params = {});

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Center frequencies (Hz) of the triangular filters, ascending.
std::vector<double> mel_center_frequencies(const FrameSpec& spec);

/// n_mels x (fft_size/2 + 1) triangular filter weights, peak 1 at each
/// center, edges at the neighbouring centers (fmin/fmax at the ends).
Eigen::MatrixXd mel_filterbank(const FrameSpec& spec, int sample_rate,
                               int fft_size);

/// Pre-emphasis over the whole signal, Hamming window, power spectrum,
/// mel filterbank, natural log floored at floor_eps.
FeatureMatrix logmel(const Waveform& w, const FrameSpec& spec = {});

/// Subtracts from each frame the mean over a window_s window centered on it.
/// Near the edges the window is shifted to stay inside the matrix, and when
/// the matrix is shorter than the window it covers all frames.
FeatureMatrix apply_cms(const FeatureMatrix& feats, double window_s = 3.0);

FeatureMatrix drop_nonspeech(const FeatureMatrix& feats, const SadMarks& sad);

/// Speech runs of SAD frames as time intervals on the frame-shift grid,
/// offset by half the window overhang so each interval is centered on its
/// frames.
SessionTimeline speech_timeline(const SadMarks& sad, const SadParams& params,
                                double duration_s, std::string sessionid);

void write_sad_marks(std::ostream& out, const SadMarks& sad);
void write_sad_marks(const std::filesystem::path& path, const SadMarks& sad);
SadMarks read_sad_marks(std::istream& in);
SadMarks read_sad_marks(const std::filesystem::path& path);

enum class CmsOrder { kDropThenCms, kCmsThenDrop };

struct FrontEndConfig {
  FrameSpec frames;
  SadParams sad;
  double cms_window_s = 3.0;
  CmsOrder order = CmsOrder::kDropThenCms;
};

/// SAD + log-mel + frame dropping + CMS. Throws when no speech frame
/// survives.
FeatureMatrix front_end(const Waveform& w, const FrontEndConfig& cfg);

}  // namespace ctsforge

#endif  // CTSFORGE_DSP_H_
