// ctsforge/config.h

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

// Pipeline configuration: an INI file with one section per stage. Every key
// is optional; missing keys keep their defaults, unknown sections or keys are
// an error.

#ifndef CTSFORGE_CONFIG_H_
#define CTSFORGE_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctsforge/augment.h"
#include "ctsforge/backend.h"
#include "ctsforge/corpus.h"
#include "ctsforge/dsp.h"
#include "ctsforge/metrics.h"
#include "ctsforge/nnet.h"
#include "ctsforge/synth.h"

namespace ctsforge {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PipelineConfig {
  struct Corpus {
    double min_dur = kMinSegmentSpeech;
    double max_dur = kMaxSegmentSpeech;
    std::uint64_t seed = 1;
    bool operator==(const Corpus&) const = default;
  } corpus;

  struct Synth {
    int n_speakers = 50;
    int sessions_per_speaker = 5;
    int heldout_speakers = 10;  // written to the eval set, never trained on
    double min_speech_s = 10.5;
    double max_speech_s = 14.0;
    double formant_jitter = 0.02;
    int noise_files_per_category = 2;
    double noise_duration_s = 20.0;
    std::uint64_t seed = 7;
    bool operator==(const Synth&) const = default;
  } synth;

  struct FrontEnd {
    FrameSpec frames;  // compared field by field below
    double cms_window_s = 3.0;
    std::string cms_order = "drop-then-cms";
    bool operator==(const FrontEnd& o) const;
  } frontend;

  struct Sad {
    SadParams params;
    bool operator==(const Sad& o) const;
  } sad;

  struct Augment {
    int copies = 1;
    std::vector<double> snrs_db = kDefaultSnrsDb;
    std::string mask_policy = "mild";  // mild | strong | none
    bool mask_on_the_fly = true;
    std::uint64_t seed = 3;
    bool operator==(const Augment&) const = default;
  } augment;

  MaskPolicy mask_mild = MaskPolicy::mild();
  MaskPolicy mask_strong = MaskPolicy::strong();

  struct Net {
    int frame_channels = 512;
    int pool_channels = 1500;
    int embed_dim = 512;
    double am_margin = 0.2;
    double am_scale = 40.0;
    bool operator==(const Net&) const = default;
  } net;

  struct Train {
    int epochs = 10;
    double base_lr = 0.1;
    double momentum = 0.9;
    int batch_size = 512;
    int chunk_frames = 400;
    int first_halving_epoch = 5;
    int halving_period = 2;
    std::uint64_t seed = 11;
    bool operator==(const Train&) const = default;
  } train;

  struct Backend {
    int lda_dim = 250;
    int plda_iters = 20;
    double lda_ridge = 1e-6;
    double cov_eps = kCovEps;
    bool originals_only = true;
    std::string cosine_input = "pre-lda";  // pre-lda | post-lda
    bool operator==(const Backend&) const = default;
  } backend;

  CostParams cost;

  bool operator==(const PipelineConfig& o) const;

  /// Throws ConfigError describing the first unusable value.
  void check() const;

  // Resolved module configs.
  FrontEndConfig front_end_config() const;
  SegmenterConfig segmenter_config() const;
  MaskPolicy mask_policy() const;  // "none" gives zero masks
  EtdnnConfig etdnn_config(int n_speakers, int input_dim) const;
  AmSoftmaxParams am_params() const { return {net.am_margin, net.am_scale}; }
};

/// Parses INI text. Throws ConfigError for syntax errors, unknown sections
/// or keys, malformed values, and values rejected by check().
PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config(const std::filesystem::path& path);

/// Complete INI text with every key, commented. parse_config of the result
/// gives back an equal config.
std::string serialize_config(const PipelineConfig& cfg);

}  // namespace ctsforge

#endif  // CTSFORGE_CONFIG_H_
