// ctsforge/synth.h

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

// Synthetic telephone corpus for desk-scale runs. NOT real speech and not
// derived from any LDC release: each "speaker" is a fixed random set of
// vowel formant envelopes over a pulse-plus-noise source, switched syllable
// by syllable, with per-session formant jitter, channel tilt and level
// changes, and pauses between speech bursts.

#ifndef CTSFORGE_SYNTH_H_
#define CTSFORGE_SYNTH_H_

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ctsforge/augment.h"
#include "ctsforge/corpus.h"
#include "ctsforge/random.h"
#include "ctsforge/wav.h"

namespace ctsforge {

struct Vowel {
  std::array<double, 4> formants_hz;
  std::array<double, 4> bandwidths_hz;
};

struct VoiceProfile {
  std::vector<Vowel> vowels;
  double f0_hz = 120.0;
  double voicing = 0.7;  // pulse share of the source energy
  double syllable_s = 0.2;  // mean syllable length
};

struct SynthConfig {
  int n_speakers = 50;
  int sessions_per_speaker = 5;
  std::uint64_t seed = 1;
  double min_speech_s = 10.5;  // total speech per session
  double max_speech_s = 14.0;
  double formant_jitter = 0.02;  // relative, per session
  std::string corpusid = "mx6";
  std::string language = "synthetic";
  std::string subject_prefix = "syn";
  int first_subject = 0;  // offset into the subject numbering
};

struct SyntheticSession {
  std::string sessionid;
  std::string subjectid;
  Gender gender = Gender::kMale;
  std::string corpusid;
  std::string phoneid;
  std::string language;
  Waveform audio;
  SessionTimeline truth;  // where speech was placed
};

VoiceProfile random_voice(Rng& rng);

/// `speech_s` seconds of continuous voice: syllables of random length, each
/// one vowel of the profile drawn at random, RMS about 0.1.
Eigen::VectorXd synthesize_voice(const VoiceProfile& voice, double speech_s,
                                 int sample_rate, Rng& rng);

/// Throws std::invalid_argument for n_speakers < 2 or sessions < 1.
std::vector<SyntheticSession> generate_synthetic_corpus(const SynthConfig& cfg);

/// A 20 s noise sample of the given category (babble from extra voices,
/// tilted Gaussian noise, or stepped harmonic tones).
NoiseSample make_noise(NoiseCategory category, double duration_s, std::uint64_t seed);

struct CorpusTableRow {
  std::string_view corpusid;
  std::size_t segments, speakers, sessions;
};

/// Per-corpus counts of the NIST SRE CTS Superset release.
inline constexpr std::array<CorpusTableRow, 10> kSupersetCounts = {{
    {"swb1r2", 26282, 442, 4757},
    {"swb2p1", 33746, 566, 7134},
    {"swb2p2", 41982, 649, 8895},
    {"swb2p3", 22865, 548, 5187},
    {"swbcellp1", 13496, 216, 2560},
    {"swbcellp2", 20985, 378, 3966},
    {"mx3", 317950, 3033, 37759},
    {"mx45", 40313, 486, 4997},
    {"mx6", 70174, 526, 8727},
    {"gb1", 17967, 167, 2188},
}};
inline constexpr std::size_t kSupersetSpeakers = 6867;
inline constexpr std::size_t kSupersetMales = 2885;

/// Metadata rows with exactly the Superset's per-corpus segment, speaker and
/// session counts, 6867 distinct subjects (2885 male) of whom 144 appear in
/// two corpora, and every subject with at least three sessions.
std::vector<SegmentRecord> make_superset_shaped_records();

}  // namespace ctsforge

#endif  // CTSFORGE_SYNTH_H_
