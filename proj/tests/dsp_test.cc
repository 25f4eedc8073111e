// tests/dsp_test.cc

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

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "ctsforge/dsp.h"
#include "ctsforge/fmat.h"
#include "ctsforge/wav.h"
#include "test_util.h"

namespace ctsforge {
namespace {

Waveform zeros(double seconds) {
  Waveform w;
  w.samples = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(seconds * kTelephoneRate));
  return w;
}

Waveform tone(double hz, double seconds, double amp = 0.5) {
  Waveform w = zeros(seconds);
  for (Eigen::Index i = 0; i < w.size(); ++i)
    w.samples[i] = amp * std::sin(2.0 * std::numbers::pi * hz * i / kTelephoneRate);
  return w;
}

Waveform white(double seconds, double amp, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(-amp, amp);
  Waveform w = zeros(seconds);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.samples[i] = u(gen);
  return w;
}

FeatureMatrix features(Eigen::MatrixXd values) {
  FeatureMatrix f;
  f.values = std::move(values);
  return f;
}

// ---------------------------------------------------------------------------
// SAD

TEST(DetectSpeech, SilenceIsNonSpeech) {
  auto marks = detect_speech(zeros(2.0));
  EXPECT_EQ(marks.size(), 198u);
  EXPECT_EQ(marks.count(), 0u);
}

TEST(DetectSpeech, FullScaleNoiseIsSpeech) {
  auto marks = detect_speech(white(2.0, 1.0, 1));
  EXPECT_EQ(marks.count(), marks.size());
}

TEST(DetectSpeech, ToneBetweenSilencesFoundWithinTwoFrames) {
  Waveform w = zeros(3.0);
  w.samples.segment(8000, 8000) = tone(440.0, 1.0).samples;
  auto marks = detect_speech(w);
  // Onset at sample 8000 = frame 100; offset at 16000, so the last frame
  // starting inside the tone is 199.
  std::ptrdiff_t first = -1, last = -1;
  for (std::size_t t = 0; t < marks.size(); ++t)
    if (marks.speech[t]) {
      if (first < 0) first = static_cast<std::ptrdiff_t>(t);
      last = static_cast<std::ptrdiff_t>(t);
    }
  EXPECT_NEAR(static_cast<double>(first), 100.0, 2.0);
  EXPECT_NEAR(static_cast<double>(last), 199.0, 2.0);
  EXPECT_EQ(marks.count(), static_cast<std::size_t>(last - first + 1));
}

TEST(DetectSpeech, DeterministicAndRejectsEmpty) {
  auto w = white(1.0, 0.3, 5);
  EXPECT_EQ(detect_speech(w).speech, detect_speech(w).speech);
  EXPECT_THROW(detect_speech(Waveform{}), std::invalid_argument);
}

TEST(SpeechTimeline, RunsBecomeIntervals) {
  SadMarks m;
  m.speech = {false, true, true, false, false, true};
  SadParams p;
  auto t = speech_timeline(m, p, 0.075, "s");
  ASSERT_EQ(t.speech_intervals.size(), 2u);
  // Frames t cover [10t, 10t + 25) ms; intervals are centered on them.
  EXPECT_NEAR(t.speech_intervals[0].start, 0.0175, 1e-12);
  EXPECT_NEAR(t.speech_intervals[0].end, 0.0375, 1e-12);
  EXPECT_NO_THROW(t.check());
}

TEST(SadMarksFile, RoundTrip) {
  SadMarks m;
  m.speech = {true, false, false, true, true};
  std::ostringstream out;
  write_sad_marks(out, m);
  EXPECT_EQ(out.str(), "10011\n");
  std::istringstream in(out.str());
  EXPECT_EQ(read_sad_marks(in).speech, m.speech);
  std::istringstream bad("10x1\n");
  EXPECT_THROW(read_sad_marks(bad), std::runtime_error);
}

// ---------------------------------------------------------------------------
// Log-mel

TEST(Logmel, OneSecondGivesNinetyEightFrames) {
  auto f = logmel(white(1.0, 0.1, 2));
  EXPECT_EQ(f.frames(), 98);
  EXPECT_EQ(f.dims(), 64);
  EXPECT_EQ(num_frames(8000, 200, 80), 98);
  EXPECT_EQ(num_frames(199, 200, 80), 0);
}

TEST(Logmel, SilenceIsTheFloor) {
  FrameSpec spec;
  auto f = logmel(zeros(0.5), spec);
  EXPECT_TRUE((f.values.array() == std::log(spec.floor_eps)).all());
}

TEST(Logmel, ToneArgmaxIsNearestCenter) {
  // Filter centers recomputed here from the HTK mel formula: n_mels + 2 points
  // equally spaced in mel between fmin and fmax, ends dropped.
  FrameSpec spec;
  auto mel = [](double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); };
  auto hz = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
  int nearest = 0;
  double best = 1e9;
  for (int i = 0; i < spec.n_mels; ++i) {
    double c = hz(mel(spec.fmin) + (mel(spec.fmax) - mel(spec.fmin)) * (i + 1) /
                                       (spec.n_mels + 1));
    if (std::abs(c - 1000.0) < best) best = std::abs(c - 1000.0), nearest = i;
  }
  auto f = logmel(tone(1000.0, 1.0), spec);
  for (Eigen::Index t = 0; t < f.frames(); ++t) {
    Eigen::Index arg;
    f.values.row(t).maxCoeff(&arg);
    ASSERT_EQ(arg, nearest) << "frame " << t;
  }
}

TEST(Logmel, CentersAscendWithinBand) {
  FrameSpec spec;
  auto c = mel_center_frequencies(spec);
  ASSERT_EQ(c.size(), 64u);
  EXPECT_GT(c.front(), spec.fmin);
  EXPECT_LT(c.back(), spec.fmax);
  EXPECT_TRUE(std::is_sorted(c.begin(), c.end()));
  EXPECT_NEAR(mel_to_hz(hz_to_mel(1234.5)), 1234.5, 1e-9);
}

TEST(Logmel, OneHopOfSilenceShiftsFramesByOne) {
  auto w = white(1.0, 0.2, 3);
  Waveform shifted = zeros(0.0);
  shifted.samples = Eigen::VectorXd::Zero(w.size() + 80);
  shifted.samples.tail(w.size()) = w.samples;
  auto a = logmel(w), b = logmel(shifted);
  ASSERT_EQ(b.frames(), a.frames() + 1);
  EXPECT_LT((b.values.bottomRows(a.frames()) - a.values).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Logmel, FiniteOnAnyFiniteInput) {
  Waveform w = white(0.5, 1.0, 4);
  w.samples.segment(1000, 500).setZero();
  w.samples[10] = 1.0;
  EXPECT_TRUE(logmel(w).values.allFinite());
  EXPECT_THROW(logmel(zeros(0.02)), std::invalid_argument);
  FrameSpec bad;
  bad.fmax = 4100.0;
  EXPECT_THROW(logmel(w, bad), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// CMS

/// Naive oracle: a width-W window centered on t (start t - W/2), shifted to
/// stay inside [0, T), covering everything when T <= W.
Eigen::MatrixXd cms_oracle(const Eigen::MatrixXd& x, Eigen::Index width) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd out(n, x.cols());
  for (Eigen::Index t = 0; t < n; ++t) {
    Eigen::Index a, b;
    if (n <= width) {
      a = 0, b = n;
    } else {
      a = std::clamp<Eigen::Index>(t - width / 2, 0, n - width);
      b = a + width;
    }
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(x.cols());
    for (Eigen::Index k = a; k < b; ++k) mean += x.row(k);
    out.row(t) = x.row(t) - mean / static_cast<double>(b - a);
  }
  return out;
}

TEST(ApplyCms, ConstantInputBecomesZero) {
  auto out = apply_cms(features(Eigen::MatrixXd::Constant(700, 8, -3.25)));
  EXPECT_EQ(out.values.cwiseAbs().maxCoeff(), 0.0);
}

TEST(ApplyCms, ShortInputSubtractsGlobalMean) {
  std::mt19937 gen(5);
  Eigen::MatrixXd x = testing::random_matrix(120, 64, gen);
  Eigen::MatrixXd expected = x.rowwise() - x.colwise().mean();
  EXPECT_LT((apply_cms(features(x)).values - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ApplyCms, MatchesNaiveRecomputation) {
  std::mt19937 gen(6);
  Eigen::MatrixXd x = testing::random_matrix(500, 64, gen, 3.0);
  auto out = apply_cms(features(x), 3.0);
  EXPECT_LT((out.values - cms_oracle(x, 300)).cwiseAbs().maxCoeff(), 1e-12);
  auto narrow = apply_cms(features(x), 0.51);
  EXPECT_LT((narrow.values - cms_oracle(x, 51)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ApplyCms, IdempotentWhenShorterThanWindow) {
  std::mt19937 gen(7);
  for (Eigen::Index n : {1, 2, 150, 300}) {
    auto once = apply_cms(features(testing::random_matrix(n, 16, gen)));
    auto twice = apply_cms(once);
    EXPECT_LT((twice.values - once.values).cwiseAbs().maxCoeff(), 1e-12) << n;
  }
}

// ---------------------------------------------------------------------------
// Frame dropping and the composed front end

TEST(DropNonspeech, SelectsMarkedRowsInOrder) {
  Eigen::MatrixXd x(10, 64);
  for (Eigen::Index t = 0; t < 10; ++t) x.row(t).setConstant(static_cast<double>(t));
  SadMarks all, none, alt;
  all.speech.assign(10, true);
  none.speech.assign(10, false);
  for (int t = 0; t < 10; ++t) alt.speech.push_back(t % 2 == 0);
  EXPECT_EQ(drop_nonspeech(features(x), all).values, x);
  EXPECT_EQ(drop_nonspeech(features(x), none).values.rows(), 0);
  EXPECT_EQ(drop_nonspeech(features(x), none).values.cols(), 64);
  auto out = drop_nonspeech(features(x), alt);
  ASSERT_EQ(out.frames(), 5);
  for (Eigen::Index i = 0; i < 5; ++i) EXPECT_EQ(out.values(i, 0), 2.0 * i);
  alt.speech.pop_back();
  EXPECT_THROW(drop_nonspeech(features(x), alt), std::invalid_argument);
}

TEST(FrontEnd, DropsSilenceAndKeepsFinite) {
  Waveform w = zeros(3.0);
  w.samples.segment(8000, 8000) = white(1.0, 0.3, 8).samples;
  FrontEndConfig cfg;
  auto f = front_end(w, cfg);
  EXPECT_NEAR(static_cast<double>(f.frames()), 100.0, 4.0);
  EXPECT_TRUE(f.values.allFinite());
  // Shorter than the CMS window, so each column has zero mean.
  EXPECT_LT(f.values.colwise().mean().cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_THROW(front_end(zeros(1.0), cfg), std::runtime_error);
}

// ---------------------------------------------------------------------------
// File formats

TEST(WavFile, RoundTripWithinQuantization) {
  testing::TempDir dir("wav");
  auto w = white(0.25, 0.9, 9);
  write_wav(dir / "a.wav", w);
  auto back = read_wav(dir / "a.wav");
  ASSERT_EQ(back.size(), w.size());
  EXPECT_EQ(back.sample_rate, 8000);
  EXPECT_LT((back.samples - w.samples).cwiseAbs().maxCoeff(), 1.0 / 32767.0);
  Waveform wide = w;
  wide.sample_rate = 16000;
  write_wav(dir / "b.wav", wide);
  EXPECT_THROW(read_wav(dir / "b.wav"), std::runtime_error);
}

TEST(FmatFile, RoundTripAtFloatPrecision) {
  std::mt19937 gen(10);
  Eigen::MatrixXd m = testing::random_matrix(7, 3, gen);
  std::stringstream s;
  write_fmat(s, m);
  EXPECT_EQ(s.str().size(), 4u + 8u + 7u * 3u * 4u);
  EXPECT_EQ(s.str().substr(0, 4), "FMAT");
  auto back = read_fmat(s);
  EXPECT_EQ(back, m.cast<float>().cast<double>());
}

}  // namespace
}  // namespace ctsforge
