// tests/augment_test.cc

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

#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ctsforge/augment.h"
#include "ctsforge/synth.h"
#include "test_util.h"

namespace ctsforge {
namespace {

Waveform random_wave(Eigen::Index n, double amp, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> nd(0.0, amp);
  Waveform w;
  w.samples.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) w.samples[i] = nd(gen);
  return w;
}

double mean_square(const Eigen::VectorXd& v) {
  return v.squaredNorm() / static_cast<double>(v.size());
}

// ---------------------------------------------------------------------------
// Noise mixing

TEST(MixNoise, CleanSentinelReturnsSpeech) {
  auto speech = random_wave(4000, 0.05, 1);
  NoiseSample noise{random_wave(8000, 0.1, 2), NoiseCategory::kNoise};
  Rng rng(1);
  auto r = mix_noise(speech, noise, kCleanSnr, rng);
  EXPECT_EQ(r.mixed.samples, speech.samples);
  EXPECT_EQ(r.clipped_fraction, 0.0);
}

TEST(MixNoise, HitsTargetSnr) {
  auto speech = random_wave(8000, 0.05, 3);
  NoiseSample noise{random_wave(3000, 0.2, 4), NoiseCategory::kBabble};  // tiled
  for (double snr : {0.0, 10.0, 5.0, -3.0}) {
    Rng rng(static_cast<std::uint64_t>(snr + 100));
    auto r = mix_noise(speech, noise, snr, rng);
    ASSERT_EQ(r.clipped_fraction, 0.0);
    Eigen::VectorXd scaled_noise = r.mixed.samples - speech.samples;
    double ratio = mean_square(speech.samples) / mean_square(scaled_noise);
    EXPECT_NEAR(ratio, std::pow(10.0, snr / 10.0), 1e-6 * std::pow(10.0, snr / 10.0));
    if (snr == 0.0) {
      EXPECT_NEAR(std::sqrt(mean_square(speech.samples) / mean_square(scaled_noise)), 1.0,
                  1e-6);
    }
  }
}

TEST(MixNoise, ExcerptIsCyclicFromOffset) {
  auto speech = random_wave(500, 0.05, 5);
  NoiseSample noise{random_wave(300, 0.1, 6), NoiseCategory::kMusic};
  Rng rng(9);
  auto r = mix_noise(speech, noise, 5.0, rng);
  for (Eigen::Index i = 0; i < speech.size(); ++i)
    ASSERT_NEAR(r.mixed.samples[i] - speech.samples[i],
                r.gain * noise.waveform.samples[(r.noise_offset + i) % 300], 1e-15);
}

TEST(MixNoise, ScaleConsistent) {
  auto speech = random_wave(2000, 0.05, 7);
  NoiseSample noise{random_wave(2000, 0.1, 8), NoiseCategory::kNoise};
  NoiseSample loud = noise;
  Waveform quiet = speech;
  const double c = 0.25;
  loud.waveform.samples *= c;
  quiet.samples *= c;
  Rng a(11), b(11);
  auto r1 = mix_noise(speech, noise, 5.0, a);
  auto r2 = mix_noise(quiet, loud, 5.0, b);
  ASSERT_EQ(r1.noise_offset, r2.noise_offset);
  // g * noise / speech is unchanged when both inputs are scaled by c.
  EXPECT_LT((c * r1.mixed.samples - r2.mixed.samples).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_NEAR(r1.gain, r2.gain, 1e-12);
}

TEST(MixNoise, ReportsClipping) {
  Waveform speech;
  speech.samples = Eigen::VectorXd::Constant(100, 0.9);
  NoiseSample noise{Waveform{}, NoiseCategory::kNoise};
  noise.waveform.samples = Eigen::VectorXd::Constant(100, 1.0);
  Rng rng(1);
  auto r = mix_noise(speech, noise, 0.0, rng);
  EXPECT_EQ(r.clipped_fraction, 1.0);
  EXPECT_EQ(r.mixed.samples.maxCoeff(), 1.0);
}

TEST(MixNoise, ZeroEnergyIsAnError) {
  Waveform silent;
  silent.samples = Eigen::VectorXd::Zero(100);
  NoiseSample noise{random_wave(100, 0.1, 1), NoiseCategory::kNoise};
  NoiseSample quiet{silent, NoiseCategory::kNoise};
  Rng rng(1);
  EXPECT_THROW(mix_noise(silent, noise, 5.0, rng), std::invalid_argument);
  EXPECT_THROW(mix_noise(random_wave(100, 0.1, 2), quiet, 5.0, rng),
               std::invalid_argument);
}

TEST(PickSnr, DrawsFromChoices) {
  Rng rng(3);
  std::map<double, int> seen;
  for (int i = 0; i < 400; ++i) ++seen[pick_snr(rng)];
  EXPECT_EQ(seen.size(), 4u);
  for (const auto& [snr, n] : seen)
    EXPECT_NE(std::find(kDefaultSnrsDb.begin(), kDefaultSnrsDb.end(), snr),
              kDefaultSnrsDb.end());
}

// ---------------------------------------------------------------------------
// Masking

FeatureMatrix ramp(Eigen::Index t, Eigen::Index f) {
  FeatureMatrix m;
  m.values.resize(t, f);
  for (Eigen::Index i = 0; i < m.values.size(); ++i)
    m.values.data()[i] = 1.0 + static_cast<double>(i);  // never equals 0
  return m;
}

TEST(SpecMask, ZeroWidthsAreIdentity) {
  auto x = ramp(50, 16);
  Rng rng(1);
  EXPECT_EQ(spec_mask(x, {"zero", 3, 0, 3, 0}, rng).values, x.values);
  EXPECT_EQ(spec_mask(x, {"none", 0, 9, 0, 9}, rng).values, x.values);
}

TEST(SpecMask, FullWidthFrequencyMaskStaysInBounds) {
  auto x = ramp(30, 64);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    auto y = spec_mask(x, {"full", 1, 64, 0, 0}, rng);
    Eigen::Index masked_cols = 0;
    for (Eigen::Index c = 0; c < 64; ++c) {
      bool all = (y.values.col(c).array() == 0.0).all();
      bool none = (y.values.col(c).array() == x.values.col(c).array()).all();
      ASSERT_TRUE(all || none);
      masked_cols += all;
    }
    EXPECT_LE(masked_cols, 64);
  }
}

TEST(SpecMask, MatchesIndependentReplay) {
  auto x = ramp(100, 64);
  MaskPolicy policy{"test", 2, 12, 3, 25};
  Rng rng(2024);
  auto y = spec_mask(x, policy, rng, -7.0);

  // Replay: freq masks then time masks; each draws width then start.
  Rng replay(2024);
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> mask =
      Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(100, 64, false);
  for (int i = 0; i < policy.n_freq_masks; ++i) {
    auto w = std::min<std::int64_t>(replay.uniform_int(0, policy.max_freq_width), 64);
    auto s = replay.uniform_int(0, 64 - w);
    for (auto c = s; c < s + w; ++c) mask.col(c).setConstant(true);
  }
  for (int i = 0; i < policy.n_time_masks; ++i) {
    auto w = std::min<std::int64_t>(replay.uniform_int(0, policy.max_time_width), 100);
    auto s = replay.uniform_int(0, 100 - w);
    for (auto t = s; t < s + w; ++t) mask.row(t).setConstant(true);
  }
  for (Eigen::Index t = 0; t < 100; ++t)
    for (Eigen::Index f = 0; f < 64; ++f)
      ASSERT_EQ(y.values(t, f), mask(t, f) ? -7.0 : x.values(t, f)) << t << "," << f;
}

TEST(SpecMask, ChangedCellsBounded) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng pick(seed);
    Eigen::Index t = pick.uniform_int(1, 120), f = pick.uniform_int(1, 64);
    MaskPolicy p{"p", static_cast<int>(pick.uniform_int(0, 3)),
                 static_cast<int>(pick.uniform_int(0, 80)),
                 static_cast<int>(pick.uniform_int(0, 3)),
                 static_cast<int>(pick.uniform_int(0, 150))};
    auto x = ramp(t, f);
    Rng rng(seed + 1000);
    auto y = spec_mask(x, p, rng);
    Eigen::Index changed = (y.values.array() != x.values.array()).count();
    ASSERT_LE(changed, static_cast<Eigen::Index>(p.n_freq_masks) * p.max_freq_width * t +
                           static_cast<Eigen::Index>(p.n_time_masks) * p.max_time_width * f);
  }
}

TEST(SpecMask, DeterministicGivenSeed) {
  auto x = ramp(80, 32);
  Rng a(5), b(5);
  EXPECT_EQ(spec_mask(x, MaskPolicy::strong(), a).values,
            spec_mask(x, MaskPolicy::strong(), b).values);
  EXPECT_EQ(MaskPolicy::by_name("mild").max_time_width, 10);
  EXPECT_THROW(MaskPolicy::by_name("medium"), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Files and names

TEST(NoiseManifest, RoundTripResolvesRelativePaths) {
  testing::TempDir dir("noise");
  std::filesystem::create_directories(dir / "sub");
  std::vector<NoiseEntry> entries = {{dir / "sub" / "a.wav", NoiseCategory::kBabble},
                                     {dir / "b.wav", NoiseCategory::kMusic}};
  write_noise_manifest(dir / "sub" / "noise.tsv", entries);
  EXPECT_EQ(testing::slurp(dir / "sub" / "noise.tsv"), "a.wav\tbabble\n../b.wav\tmusic\n");
  auto back = read_noise_manifest(dir / "sub" / "noise.tsv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(std::filesystem::weakly_canonical(back[1].path),
            std::filesystem::weakly_canonical(entries[1].path));
  EXPECT_EQ(back[0].category, NoiseCategory::kBabble);
  EXPECT_THROW(parse_noise_category("speech"), std::invalid_argument);
}

TEST(AugmentedName, Format) {
  EXPECT_EQ(augmented_name("mx6_0001_003", "babble", 42), "mx6_0001_003__babble__42.wav");
}

TEST(MakeNoise, CategoriesAreDistinctAndNormalized) {
  for (auto c : {NoiseCategory::kBabble, NoiseCategory::kNoise, NoiseCategory::kMusic}) {
    auto n = make_noise(c, 2.0, 5);
    EXPECT_EQ(n.category, c);
    EXPECT_EQ(n.waveform.size(), 16000);
    // RMS is set before the rare peaks are clipped to [-1, 1].
    EXPECT_NEAR(std::sqrt(mean_square(n.waveform.samples)), 0.1, 2e-3);
    EXPECT_LE(n.waveform.samples.cwiseAbs().maxCoeff(), 1.0);
    EXPECT_EQ(make_noise(c, 2.0, 5).waveform.samples, n.waveform.samples);
  }
}

}  // namespace
}  // namespace ctsforge
