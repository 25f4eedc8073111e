// dsp.cc

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

#include "ctsforge/dsp.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include <unsupported/Eigen/FFT>

namespace ctsforge {

namespace {

Eigen::Index ms_to_samples(double ms, int rate) {
  return static_cast<Eigen::Index>(std::lround(ms * rate / 1000.0));
}

int next_pow2(Eigen::Index n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

Eigen::Index FrameSpec::frame_length(int sample_rate) const {
  return ms_to_samples(frame_len_ms, sample_rate);
}

Eigen::Index FrameSpec::frame_step(int sample_rate) const {
  return ms_to_samples(frame_shift_ms, sample_rate);
}

void FrameSpec::check(int sample_rate) const {
  if (sample_rate <= 0) throw std::invalid_argument("sample_rate must be > 0");
  if (frame_step(sample_rate) < 1 ||
      frame_step(sample_rate) > frame_length(sample_rate))
    throw std::invalid_argument("need 0 < frame_shift <= frame_len");
  if (n_mels < 1) throw std::invalid_argument("n_mels must be positive");
  if (!(fmin >= 0.0 && fmin < fmax && fmax <= sample_rate / 2.0))
    throw std::invalid_argument("need 0 <= fmin < fmax <= sample_rate/2");
}

Eigen::Index num_frames(Eigen::Index n_samples, Eigen::Index frame_length,
                        Eigen::Index frame_step) {
  if (n_samples < frame_length) return 0;
  return (n_samples - frame_length) / frame_step + 1;
}

std::size_t SadMarks::count() const {
  return static_cast<std::size_t>(
      std::count(speech.begin(), speech.end(), true));
}

SadMarks detect_speech(const Waveform& w, const SadParams& params) {
  if (w.size() == 0) throw std::invalid_argument("detect_speech: empty waveform");
  const auto len = ms_to_samples(params.frame_len_ms, w.sample_rate);
  const auto step = ms_to_samples(params.frame_shift_ms, w.sample_rate);
  const auto n = num_frames(w.size(), len, step);
  if (n == 0) throw std::invalid_argument("detect_speech: shorter than a frame");

  std::vector<double> energy_db(static_cast<std::size_t>(n));
  for (Eigen::Index t = 0; t < n; ++t) {
    double ms = w.samples.segment(t * step, len).squaredNorm() /
                static_cast<double>(len);
    energy_db[static_cast<std::size_t>(t)] = 10.0 * std::log10(ms + 1e-20);
  }

  std::vector<double> sorted = energy_db;
  auto q = static_cast<std::size_t>(params.floor_quantile *
                                    static_cast<double>(sorted.size() - 1));
  std::nth_element(sorted.begin(), sorted.begin() + q, sorted.end());
  double noise_floor = std::min(sorted[q], params.noise_ceiling_db);
  double threshold =
      std::max(noise_floor + params.margin_db, params.absolute_floor_db);

  std::vector<bool> raw(energy_db.size());
  for (std::size_t t = 0; t < raw.size(); ++t) raw[t] = energy_db[t] > threshold;

  SadMarks marks;
  marks.speech.resize(raw.size());
  const auto half = static_cast<std::ptrdiff_t>(params.median_width / 2);
  const auto total = static_cast<std::ptrdiff_t>(raw.size());
  for (std::ptrdiff_t t = 0; t < total; ++t) {
    std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, t - half);
    std::ptrdiff_t hi = std::min(total - 1, t + half);
    std::ptrdiff_t on = 0;
    for (auto k = lo; k <= hi; ++k) on += raw[static_cast<std::size_t>(k)];
    std::ptrdiff_t width = hi - lo + 1;
    // Median of a truncated even window is ambiguous; keep the raw decision.
    marks.speech[static_cast<std::size_t>(t)] =
        2 * on == width ? raw[static_cast<std::size_t>(t)] : 2 * on > width;
  }
  return marks;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

namespace {

std::vector<double> mel_edges(const FrameSpec& spec) {
  const double lo = hz_to_mel(spec.fmin), hi = hz_to_mel(spec.fmax);
  std::vector<double> edges(static_cast<std::size_t>(spec.n_mels) + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) /
                                  static_cast<double>(spec.n_mels + 1));
  edges.front() = spec.fmin;
  edges.back() = spec.fmax;
  return edges;
}

}  // namespace

std::vector<double> mel_center_frequencies(const FrameSpec& spec) {
  auto edges = mel_edges(spec);
  return {edges.begin() + 1, edges.end() - 1};
}

Eigen::MatrixXd mel_filterbank(const FrameSpec& spec, int sample_rate,
                               int fft_size) {
  const auto edges = mel_edges(spec);
  const int n_bins = fft_size / 2 + 1;
  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(spec.n_mels, n_bins);
  for (int m = 0; m < spec.n_mels; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    for (int k = 0; k < n_bins; ++k) {
      double f = static_cast<double>(k) * sample_rate / fft_size;
      if (f > left && f < center)
        fb(m, k) = (f - left) / (center - left);
      else if (f >= center && f < right)
        fb(m, k) = (right - f) / (right - center);
    }
  }
  return fb;
}

FeatureMatrix logmel(const Waveform& w, const FrameSpec& spec) {
  spec.check(w.sample_rate);
  const auto len = spec.frame_length(w.sample_rate);
  const auto step = spec.frame_step(w.sample_rate);
  const auto n = num_frames(w.size(), len, step);
  if (n == 0) throw std::invalid_argument("logmel: waveform shorter than one frame");

  const int fft_size = next_pow2(len);
  const Eigen::MatrixXd fb = mel_filterbank(spec, w.sample_rate, fft_size);

  Eigen::VectorXd emphasized(w.size());
  emphasized[0] = w.samples[0];
  emphasized.tail(w.size() - 1) =
      w.samples.tail(w.size() - 1) - spec.preemphasis * w.samples.head(w.size() - 1);

  Eigen::VectorXd window(len);
  for (Eigen::Index i = 0; i < len; ++i)
    window[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (len - 1));

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> frame(static_cast<std::size_t>(fft_size), 0.0);
  std::vector<std::complex<double>> spectrum;
  Eigen::VectorXd power(fft_size / 2 + 1);

  FeatureMatrix out;
  out.frame_shift_ms = spec.frame_shift_ms;
  out.values.resize(n, spec.n_mels);
  for (Eigen::Index t = 0; t < n; ++t) {
    for (Eigen::Index i = 0; i < len; ++i)
      frame[static_cast<std::size_t>(i)] = emphasized[t * step + i] * window[i];
    fft.fwd(spectrum, frame);
    for (Eigen::Index k = 0; k < power.size(); ++k)
      power[k] = std::norm(spectrum[static_cast<std::size_t>(k)]);
    out.values.row(t) =
        (fb * power).array().max(spec.floor_eps).log().transpose();
  }
  return out;
}

FeatureMatrix apply_cms(const FeatureMatrix& feats, double window_s) {
  const Eigen::Index n = feats.frames();
  const Eigen::Index dims = feats.dims();
  const auto width = std::max<Eigen::Index>(
      1, std::lround(window_s * 1000.0 / feats.frame_shift_ms));

  // prefix(t) = sum of rows [0, t)
  Eigen::MatrixXd prefix = Eigen::MatrixXd::Zero(n + 1, dims);
  for (Eigen::Index t = 0; t < n; ++t)
    prefix.row(t + 1) = prefix.row(t) + feats.values.row(t);

  FeatureMatrix out;
  out.frame_shift_ms = feats.frame_shift_ms;
  out.values.resize(n, dims);
  for (Eigen::Index t = 0; t < n; ++t) {
    Eigen::Index start = t - width / 2;
    Eigen::Index end = start + width;
    if (start < 0) {
      end -= start;
      start = 0;
    }
    if (end > n) {
      start = std::max<Eigen::Index>(0, start - (end - n));
      end = n;
    }
    out.values.row(t) = feats.values.row(t) -
                        (prefix.row(end) - prefix.row(start)) /
                            static_cast<double>(end - start);
  }
  return out;
}

FeatureMatrix drop_nonspeech(const FeatureMatrix& feats, const SadMarks& sad) {
  if (static_cast<Eigen::Index>(sad.size()) != feats.frames())
    throw std::invalid_argument("drop_nonspeech: " + std::to_string(sad.size()) +
                                " SAD marks for " +
                                std::to_string(feats.frames()) + " frames");
  FeatureMatrix out;
  out.frame_shift_ms = feats.frame_shift_ms;
  out.values.resize(static_cast<Eigen::Index>(sad.count()), feats.dims());
  Eigen::Index row = 0;
  for (Eigen::Index t = 0; t < feats.frames(); ++t)
    if (sad.speech[static_cast<std::size_t>(t)])
      out.values.row(row++) = feats.values.row(t);
  return out;
}

SessionTimeline speech_timeline(const SadMarks& sad, const SadParams& params,
                                double duration_s, std::string sessionid) {
  const double shift = params.frame_shift_ms / 1000.0;
  const double offset = (params.frame_len_ms - params.frame_shift_ms) / 2000.0;
  SessionTimeline tl;
  tl.sessionid = std::move(sessionid);
  std::size_t t = 0;
  while (t < sad.size()) {
    if (!sad.speech[t]) {
      ++t;
      continue;
    }
    std::size_t run_end = t;
    while (run_end < sad.size() && sad.speech[run_end]) ++run_end;
    double start = offset + shift * static_cast<double>(t);
    double end = std::min(duration_s, offset + shift * static_cast<double>(run_end));
    if (end > start) tl.speech_intervals.push_back({start, end});
    t = run_end;
  }
  return tl;
}

void write_sad_marks(std::ostream& out, const SadMarks& sad) {
  std::string line(sad.size(), '0');
  for (std::size_t t = 0; t < sad.size(); ++t)
    if (sad.speech[t]) line[t] = '1';
  out << line << '\n';
}

void write_sad_marks(const std::filesystem::path& path, const SadMarks& sad) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_sad_marks(out, sad);
}

SadMarks read_sad_marks(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty SAD marks file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  SadMarks sad;
  sad.speech.reserve(line.size());
  for (char c : line) {
    if (c != '0' && c != '1')
      throw std::runtime_error("SAD marks must be 0/1 characters");
    sad.speech.push_back(c == '1');
  }
  return sad;
}

SadMarks read_sad_marks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_sad_marks(in);
}

FeatureMatrix front_end(const Waveform& w, const FrontEndConfig& cfg) {
  SadMarks sad = detect_speech(w, cfg.sad);
  FeatureMatrix feats = logmel(w, cfg.frames);
  if (sad.count() == 0) throw std::runtime_error("front_end: no speech frames");
  if (cfg.order == CmsOrder::kDropThenCms)
    return apply_cms(drop_nonspeech(feats, sad), cfg.cms_window_s);
  return drop_nonspeech(apply_cms(feats, cfg.cms_window_s), sad);
}

}  // namespace ctsforge
