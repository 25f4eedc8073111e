// synth.cc

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

#include "ctsforge/synth.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

namespace ctsforge {

namespace {

constexpr double kSpeechRms = 0.1;
constexpr double kBackgroundRms = 3e-4;

// Two-pole resonator with state kept across coefficient changes. No gain
// normalization; the caller sets the level afterwards.
struct Resonator {
  double y1 = 0.0, y2 = 0.0;
  double a1 = 0.0, a2 = 0.0, g = 0.0;

  void tune(double freq, double bw, int sample_rate) {
    const double r = std::exp(-std::numbers::pi * bw / sample_rate);
    a1 = 2.0 * r * std::cos(2.0 * std::numbers::pi * freq / sample_rate);
    a2 = -r * r;
    g = 1.0 - r;
  }
  double step(double x) {
    const double y = g * x + a1 * y1 + a2 * y2;
    y2 = y1;
    y1 = y;
    return y;
  }
};

void set_rms(Eigen::VectorXd& x, double rms) {
  if (x.size() == 0) return;
  const double cur = std::sqrt(x.squaredNorm() / static_cast<double>(x.size()));
  if (cur > 0.0) x *= rms / cur;
}

Eigen::VectorXd gaussian(Eigen::Index n, double sigma, Rng& rng) {
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = sigma * rng.normal();
  return x;
}

Vowel random_vowel(Rng& rng) {
  Vowel v;
  v.formants_hz = {rng.uniform(250.0, 900.0), rng.uniform(800.0, 2400.0),
                   rng.uniform(2200.0, 3200.0), rng.uniform(3200.0, 3700.0)};
  for (auto& b : v.bandwidths_hz) b = rng.uniform(50.0, 160.0);
  return v;
}

VoiceProfile perturb(const VoiceProfile& voice, double jitter, Rng& rng) {
  VoiceProfile out = voice;
  for (auto& v : out.vowels) {
    for (std::size_t k = 0; k < v.formants_hz.size(); ++k) {
      v.formants_hz[k] = std::clamp(v.formants_hz[k] * (1.0 + jitter * rng.normal()),
                                    150.0, 3850.0);
      v.bandwidths_hz[k] = std::max(v.bandwidths_hz[k] * (1.0 + 0.1 * rng.normal()), 30.0);
    }
  }
  out.f0_hz *= 1.0 + 0.05 * rng.normal();
  return out;
}

}  // namespace

VoiceProfile random_voice(Rng& rng) {
  VoiceProfile v;
  for (int k = 0; k < 5; ++k) v.vowels.push_back(random_vowel(rng));
  v.f0_hz = rng.uniform(85.0, 230.0);
  v.voicing = rng.uniform(0.5, 0.9);
  v.syllable_s = rng.uniform(0.15, 0.28);
  return v;
}

Eigen::VectorXd synthesize_voice(const VoiceProfile& voice, double speech_s,
                                 int sample_rate, Rng& rng) {
  if (voice.vowels.empty()) throw std::invalid_argument("synthesize_voice: no vowels");
  const auto n = static_cast<Eigen::Index>(std::llround(speech_s * sample_rate));
  Eigen::VectorXd x(n);
  std::array<Resonator, 4> filters;
  double phase = rng.uniform();
  Eigen::Index i = 0;
  while (i < n) {
    const auto len = std::max<Eigen::Index>(
        1, static_cast<Eigen::Index>(voice.syllable_s * rng.uniform(0.6, 1.4) * sample_rate));
    const auto& vowel = voice.vowels[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(voice.vowels.size()) - 1))];
    for (std::size_t k = 0; k < filters.size(); ++k)
      filters[k].tune(vowel.formants_hz[k], vowel.bandwidths_hz[k], sample_rate);
    const double f0 = voice.f0_hz * (1.0 + 0.08 * rng.normal());
    const double pulse_amp = std::sqrt(sample_rate / f0);
    for (Eigen::Index j = 0; j < len && i < n; ++j, ++i) {
      phase += f0 / sample_rate;
      double pulse = 0.0;
      if (phase >= 1.0) {
        phase -= 1.0;
        pulse = pulse_amp;
      }
      double y = voice.voicing * pulse + (1.0 - voice.voicing) * rng.normal();
      for (auto& f : filters) y = f.step(y);
      const double env = 0.3 + 0.7 * std::sin(std::numbers::pi * static_cast<double>(j) /
                                              static_cast<double>(len));
      x[i] = env * y;
    }
  }
  set_rms(x, kSpeechRms);
  return x;
}

std::vector<SyntheticSession> generate_synthetic_corpus(const SynthConfig& cfg) {
  if (cfg.n_speakers < 2) throw std::invalid_argument("synth: need at least two speakers");
  if (cfg.sessions_per_speaker < 1)
    throw std::invalid_argument("synth: need at least one session per speaker");
  if (!(cfg.min_speech_s > 0.0 && cfg.max_speech_s >= cfg.min_speech_s))
    throw std::invalid_argument("synth: bad speech duration range");

  const int sr = kTelephoneRate;
  std::vector<SyntheticSession> sessions;
  for (int s = 0; s < cfg.n_speakers; ++s) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%04d", cfg.subject_prefix.c_str(),
                  cfg.first_subject + s);
    const std::string subject = buf;
    Rng voice_rng(derive_seed(cfg.seed, "voice/" + subject));
    const VoiceProfile voice = random_voice(voice_rng);

    for (int k = 0; k < cfg.sessions_per_speaker; ++k) {
      SyntheticSession sess;
      sess.subjectid = subject;
      sess.sessionid = subject + "_s" + std::to_string(k);
      sess.gender = (cfg.first_subject + s) % 2 == 0 ? Gender::kMale : Gender::kFemale;
      sess.corpusid = cfg.corpusid;
      sess.phoneid = "ph" + subject + "_" + std::to_string(k % 2);
      sess.language = cfg.language;
      sess.truth.sessionid = sess.sessionid;

      Rng rng(derive_seed(cfg.seed, sess.sessionid));
      const VoiceProfile v = perturb(voice, cfg.formant_jitter, rng);
      const double tilt = rng.uniform(-0.3, 0.5);
      const double level = std::pow(10.0, rng.uniform(-6.0, 6.0) / 20.0);
      const double target = rng.uniform(cfg.min_speech_s, cfg.max_speech_s);

      // Lay out bursts and pauses first, then render.
      std::vector<Interval> bursts;
      double t = rng.uniform(0.3, 0.8), placed = 0.0;
      while (target - placed > 1e-9) {
        const double len = std::min(rng.uniform(1.5, 3.5), target - placed);
        bursts.push_back({t, t + len});
        placed += len;
        t += len + rng.uniform(0.4, 0.9);
      }
      const double total = bursts.back().end + rng.uniform(0.3, 0.8);
      const auto n = static_cast<Eigen::Index>(std::ceil(total * sr));
      Eigen::VectorXd audio = gaussian(n, kBackgroundRms, rng);
      for (auto& b : bursts) {
        const auto i0 = static_cast<Eigen::Index>(std::llround(b.start * sr));
        Eigen::VectorXd voiced = synthesize_voice(v, b.length(), sr, rng);
        const Eigen::Index len = std::min<Eigen::Index>(voiced.size(), n - i0);
        audio.segment(i0, len) += level * voiced.head(len);
        b.start = static_cast<double>(i0) / sr;
        b.end = static_cast<double>(i0 + len) / sr;
      }
      // Channel tilt, applied to everything the handset picks up.
      for (Eigen::Index i = n - 1; i > 0; --i) audio[i] -= tilt * audio[i - 1];
      sess.truth.speech_intervals = std::move(bursts);
      sess.audio.samples = audio.cwiseMax(-1.0).cwiseMin(1.0);
      sess.audio.sample_rate = sr;
      sessions.push_back(std::move(sess));
    }
  }
  return sessions;
}

NoiseSample make_noise(NoiseCategory category, double duration_s, std::uint64_t seed) {
  const int sr = kTelephoneRate;
  const auto n = static_cast<Eigen::Index>(std::llround(duration_s * sr));
  if (n <= 0) throw std::invalid_argument("make_noise: empty duration");
  Rng rng(seed);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  switch (category) {
    case NoiseCategory::kBabble:
      for (int k = 0; k < 5; ++k) {
        VoiceProfile v = random_voice(rng);
        x += synthesize_voice(v, duration_s, sr, rng).head(n);
      }
      break;
    case NoiseCategory::kNoise: {
      x = gaussian(n, 1.0, rng);
      const double a = rng.uniform(0.5, 0.95);
      for (Eigen::Index i = 1; i < n; ++i) x[i] += a * x[i - 1];
      break;
    }
    case NoiseCategory::kMusic: {
      Eigen::Index i = 0;
      while (i < n) {
        const auto len = static_cast<Eigen::Index>(rng.uniform(0.25, 0.5) * sr);
        const double f0 = 110.0 * std::pow(2.0, rng.uniform_int(0, 36) / 12.0);
        for (Eigen::Index j = 0; j < len && i + j < n; ++j) {
          const double tt = static_cast<double>(j) / sr;
          double v = 0.0;
          for (int h = 1; h <= 4 && h * f0 < 3900.0; ++h)
            v += std::sin(2.0 * std::numbers::pi * h * f0 * tt) / h;
          x[i + j] = v * std::exp(-3.0 * tt);
        }
        i += len;
      }
      break;
    }
  }
  set_rms(x, kSpeechRms);
  NoiseSample out;
  out.waveform.samples = x.cwiseMax(-1.0).cwiseMin(1.0);
  out.waveform.sample_rate = sr;
  out.category = category;
  return out;
}

std::vector<SegmentRecord> make_superset_shaped_records() {
  constexpr std::size_t kReused = 144;
  constexpr std::size_t kDonor = 6;     // mx3
  constexpr std::size_t kReceiver = 7;  // mx45

  std::vector<SegmentRecord> records;
  std::size_t total_segments = 0;
  for (const auto& row : kSupersetCounts) total_segments += row.segments;
  records.reserve(total_segments);

  std::size_t next_subject = 0;
  std::vector<std::size_t> donor_subjects;
  auto subject_name = [](std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "sub%05zu", i);
    return std::string(buf);
  };

  for (std::size_t c = 0; c < kSupersetCounts.size(); ++c) {
    const auto& row = kSupersetCounts[c];
    const std::string corpus(row.corpusid);
    std::vector<std::size_t> subjects;
    for (std::size_t s = 0; s < row.speakers; ++s) {
      if (c == kReceiver && s < kReused)
        subjects.push_back(donor_subjects.at(s));
      else
        subjects.push_back(next_subject++);
    }
    if (c == kDonor) donor_subjects = subjects;

    for (std::size_t i = 0; i < row.segments; ++i) {
      const std::size_t session = i % row.sessions;
      const std::size_t subject = subjects[session % row.speakers];
      SegmentRecord r;
      r.segmentid = corpus + "_seg" + std::to_string(i);
      r.filename = corpus + "/" + r.segmentid + ".wav";
      r.subjectid = subject_name(subject);
      r.speech_duration = 10.0 + static_cast<double>((i * 7919) % 5001) / 100.0;
      r.sessionid = corpus + "_ses" + std::to_string(session);
      r.corpusid = corpus;
      r.phoneid = corpus + "_ph" + std::to_string(session % 997);
      r.gender = subject < kSupersetMales ? Gender::kMale : Gender::kFemale;
      r.language = "eng";
      records.push_back(std::move(r));
    }
  }
  assign_speaker_ids(records);
  return records;
}

}  // namespace ctsforge
