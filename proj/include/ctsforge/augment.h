// ctsforge/augment.h

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

// Additive noise at a target SNR, and time/frequency masking of feature
// matrices.

#ifndef CTSFORGE_AUGMENT_H_
#define CTSFORGE_AUGMENT_H_

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "ctsforge/dsp.h"
#include "ctsforge/random.h"
#include "ctsforge/wav.h"

namespace ctsforge {

enum class NoiseCategory { kBabble, kNoise, kMusic };

std::string_view to_string(NoiseCategory c);
NoiseCategory parse_noise_category(std::string_view s);

struct NoiseSample {
  Waveform waveform;
  NoiseCategory category = NoiseCategory::kNoise;
};

/// Pass as snr_db to get the speech back unchanged.
inline constexpr double kCleanSnr = std::numeric_limits<double>::infinity();

struct MixResult {
  Waveform mixed;
  double gain = 0.0;              // applied to the noise excerpt
  Eigen::Index noise_offset = 0;  // excerpt start in the noise, tiled cyclically
  double clipped_fraction = 0.0;  // samples clipped to [-1, 1]
};

/// speech + gain * excerpt, where the excerpt starts at a random offset in the
/// noise (wrapping around when the noise is short) and gain makes the mean
/// square ratio of speech to scaled excerpt equal 10^(snr_db / 10).
MixResult mix_noise(const Waveform& speech, const NoiseSample& noise,
                    double snr_db, Rng& rng);

inline const std::vector<double> kDefaultSnrsDb = {0.0, 5.0, 10.0, 15.0};

double pick_snr(Rng& rng, const std::vector<double>& choices = kDefaultSnrsDb);

struct MaskPolicy {
  std::string name;
  int n_freq_masks = 0;
  int max_freq_width = 0;  // mel bins
  int n_time_masks = 0;
  int max_time_width = 0;  // frames

  // Placeholder settings; override from the config as needed.
  static MaskPolicy mild() { return {"mild", 1, 8, 1, 10}; }
  static MaskPolicy strong() { return {"strong", 2, 16, 2, 20}; }
  static MaskPolicy by_name(std::string_view name);
};

/// Frequency masks first, then time masks. Each mask draws its width with
/// uniform_int(0, max_width), clamps it to the matrix extent, then draws its
/// start with uniform_int(0, extent - width); the band is set to mask_value.
FeatureMatrix spec_mask(const FeatureMatrix& feats, const MaskPolicy& policy,
                        Rng& rng, double mask_value = 0.0);

struct NoiseEntry {
  std::filesystem::path path;
  NoiseCategory category;
};

/// TSV "path<TAB>category". Paths are written relative to the manifest's
/// directory; relative paths read back resolve against it.
std::vector<NoiseEntry> read_noise_manifest(const std::filesystem::path& path);
void write_noise_manifest(const std::filesystem::path& path,
                          const std::vector<NoiseEntry>& entries);

/// "<segmentid>__<kind>__<seed>.wav"
std::string augmented_name(std::string_view segmentid, std::string_view kind,
                           std::uint64_t seed);

}  // namespace ctsforge

#endif  // CTSFORGE_AUGMENT_H_
