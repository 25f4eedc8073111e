// augment.cc

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

#include "ctsforge/augment.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "ctsforge/text.h"

namespace ctsforge {

std::string_view to_string(NoiseCategory c) {
  switch (c) {
    case NoiseCategory::kBabble:
      return "babble";
    case NoiseCategory::kNoise:
      return "noise";
    case NoiseCategory::kMusic:
      return "music";
  }
  return "?";
}

NoiseCategory parse_noise_category(std::string_view s) {
  if (s == "babble") return NoiseCategory::kBabble;
  if (s == "noise") return NoiseCategory::kNoise;
  if (s == "music") return NoiseCategory::kMusic;
  throw std::invalid_argument("unknown noise category '" + std::string(s) + "'");
}

MixResult mix_noise(const Waveform& speech, const NoiseSample& noise,
                    double snr_db, Rng& rng) {
  const Eigen::Index n = speech.size();
  if (noise.waveform.sample_rate != speech.sample_rate)
    throw std::invalid_argument("mix_noise: sample rates differ");
  const double speech_power = n ? speech.samples.squaredNorm() / n : 0.0;
  if (!(speech_power > 0.0))
    throw std::invalid_argument("mix_noise: speech has zero energy");

  MixResult result;
  if (std::isinf(snr_db) && snr_db > 0) {
    result.mixed = speech;
    return result;
  }
  const Eigen::Index len = noise.waveform.size();
  if (len == 0) throw std::invalid_argument("mix_noise: empty noise");

  result.noise_offset = rng.uniform_int(0, len - 1);
  Eigen::VectorXd excerpt(n);
  for (Eigen::Index i = 0; i < n; ++i)
    excerpt[i] = noise.waveform.samples[(result.noise_offset + i) % len];
  const double noise_power = excerpt.squaredNorm() / n;
  if (!(noise_power > 0.0))
    throw std::invalid_argument("mix_noise: noise has zero energy");

  result.gain = std::sqrt(speech_power / (noise_power * std::pow(10.0, snr_db / 10.0)));
  result.mixed.sample_rate = speech.sample_rate;
  result.mixed.samples = speech.samples + result.gain * excerpt;
  Eigen::Index clipped = (result.mixed.samples.array().abs() > 1.0).count();
  result.mixed.samples = result.mixed.samples.cwiseMax(-1.0).cwiseMin(1.0);
  result.clipped_fraction = static_cast<double>(clipped) / static_cast<double>(n);
  return result;
}

double pick_snr(Rng& rng, const std::vector<double>& choices) {
  if (choices.empty()) throw std::invalid_argument("pick_snr: no choices");
  return choices[static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<std::int64_t>(choices.size()) - 1))];
}

MaskPolicy MaskPolicy::by_name(std::string_view name) {
  if (name == "mild") return mild();
  if (name == "strong") return strong();
  throw std::invalid_argument("unknown mask policy '" + std::string(name) + "'");
}

FeatureMatrix spec_mask(const FeatureMatrix& feats, const MaskPolicy& policy,
                        Rng& rng, double mask_value) {
  FeatureMatrix out = feats;
  const Eigen::Index frames = feats.frames(), dims = feats.dims();
  for (int i = 0; i < policy.n_freq_masks; ++i) {
    Eigen::Index width = std::min<Eigen::Index>(
        rng.uniform_int(0, policy.max_freq_width), dims);
    Eigen::Index start = rng.uniform_int(0, dims - width);
    out.values.middleCols(start, width).setConstant(mask_value);
  }
  for (int i = 0; i < policy.n_time_masks; ++i) {
    Eigen::Index width = std::min<Eigen::Index>(
        rng.uniform_int(0, policy.max_time_width), frames);
    Eigen::Index start = rng.uniform_int(0, frames - width);
    out.values.middleRows(start, width).setConstant(mask_value);
  }
  return out;
}

std::vector<NoiseEntry> read_noise_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<NoiseEntry> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto cols = split_tabs(line);
    if (cols.size() != 2)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": expected path<TAB>category");
    std::filesystem::path p(cols[0]);
    if (p.is_relative()) p = path.parent_path() / p;
    entries.push_back({p, parse_noise_category(cols[1])});
  }
  return entries;
}

void write_noise_manifest(const std::filesystem::path& path,
                          const std::vector<NoiseEntry>& entries) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const auto dir = std::filesystem::absolute(path).parent_path();
  for (const auto& e : entries)
    out << std::filesystem::absolute(e.path).lexically_relative(dir).generic_string()
        << '\t' << to_string(e.category) << '\n';
}

std::string augmented_name(std::string_view segmentid, std::string_view kind,
                           std::uint64_t seed) {
  return std::string(segmentid) + "__" + std::string(kind) + "__" +
         std::to_string(seed) + ".wav";
}

}  // namespace ctsforge
