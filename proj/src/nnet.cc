// nnet.cc

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

#include "ctsforge/nnet.h"

#include <algorithm>

namespace ctsforge {

namespace {

std::vector<LayerSpec> etdnn_frame_layers(int width, int pool_width) {
  using K = LayerKind;
  return {{K::kFrameTdnn, 5, 1, width},  {K::kFrameDense, 1, 1, width},
          {K::kFrameTdnn, 3, 2, width},  {K::kFrameDense, 1, 1, width},
          {K::kFrameTdnn, 3, 3, width},  {K::kFrameDense, 1, 1, width},
          {K::kFrameTdnn, 3, 4, width},  {K::kFrameDense, 1, 1, width},
          {K::kFrameDense, 1, 1, pool_width}};
}

}  // namespace

EtdnnConfig EtdnnConfig::full(int n_speakers, int input_dim) {
  EtdnnConfig cfg;
  cfg.input_dim = input_dim;
  cfg.n_speakers = n_speakers;
  cfg.layers = etdnn_frame_layers(512, 1500);
  cfg.layers.push_back({LayerKind::kSegDense, 1, 1, 512});
  cfg.layers.push_back({LayerKind::kSegDense, 1, 1, 512});
  return cfg;
}

EtdnnConfig EtdnnConfig::desk(int n_speakers, int input_dim, int channels,
                              int pool_channels, int embed_dim) {
  EtdnnConfig cfg;
  cfg.input_dim = input_dim;
  cfg.n_speakers = n_speakers;
  cfg.layers = etdnn_frame_layers(channels, pool_channels);
  cfg.layers.push_back({LayerKind::kSegDense, 1, 1, embed_dim});
  cfg.layers.push_back({LayerKind::kSegDense, 1, 1, embed_dim});
  return cfg;
}

int EtdnnConfig::num_frame_layers() const {
  return static_cast<int>(std::count_if(
      layers.begin(), layers.end(), [](const LayerSpec& s) { return s.frame_level(); }));
}

int EtdnnConfig::pool_channels() const {
  return layers.at(static_cast<std::size_t>(num_frame_layers() - 1)).out_channels;
}

int EtdnnConfig::embed_dim() const {
  return layers.at(static_cast<std::size_t>(num_frame_layers())).out_channels;
}

int EtdnnConfig::branch_dim() const { return layers.back().out_channels; }

int EtdnnConfig::receptive_field() const {
  int rf = 1;
  for (const auto& s : layers)
    if (s.frame_level()) rf += s.context();
  return rf;
}

void EtdnnConfig::check() const {
  if (input_dim < 1) throw std::invalid_argument("etdnn: input_dim must be positive");
  if (n_speakers < 1) throw std::invalid_argument("etdnn: need at least one speaker");
  const int n_frame = num_frame_layers();
  if (n_frame < 1) throw std::invalid_argument("etdnn: no frame-level layer");
  if (n_frame == static_cast<int>(layers.size()))
    throw std::invalid_argument("etdnn: no segment-level layer");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& s = layers[i];
    if (s.frame_level() != (static_cast<int>(i) < n_frame))
      throw std::invalid_argument("etdnn: frame layers must precede segment layers");
    if (s.out_channels < 1 || s.kernel < 1 || s.dilation < 1)
      throw std::invalid_argument("etdnn: layer " + std::to_string(i + 1) +
                                  " has a non-positive size");
    if (s.kind != LayerKind::kFrameTdnn && s.kernel != 1)
      throw std::invalid_argument("etdnn: dense layer " + std::to_string(i + 1) +
                                  " must have kernel 1");
  }
}

double lr_schedule(int epoch, double base_lr, int first_halving, int halving_period) {
  if (epoch < 0) throw std::invalid_argument("lr_schedule: negative epoch");
  if (epoch < first_halving) return base_lr;
  int halvings = (epoch - first_halving) / halving_period + 1;
  return std::ldexp(base_lr, -halvings);
}

std::vector<BatchPlan> sample_pass(const SpeakerPool& pool, int batch_size,
                                   Eigen::Index chunk_len, Rng& rng) {
  if (batch_size < 1) throw std::invalid_argument("sampler: batch_size must be positive");
  if (static_cast<int>(pool.size()) < batch_size)
    throw std::invalid_argument("sampler: " + std::to_string(pool.size()) +
                                " speakers for batch size " +
                                std::to_string(batch_size));
  std::vector<int> speakers;
  speakers.reserve(pool.size());
  for (const auto& [spk, segs] : pool) {
    if (segs.empty())
      throw std::invalid_argument("sampler: speaker " + std::to_string(spk) +
                                  " has no segments");
    speakers.push_back(spk);
  }
  for (std::size_t i = speakers.size(); i > 1; --i)
    std::swap(speakers[i - 1], speakers[static_cast<std::size_t>(
                                   rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);

  std::vector<BatchPlan> batches;
  for (std::size_t start = 0; start < speakers.size();
       start += static_cast<std::size_t>(batch_size)) {
    std::size_t end = std::min(speakers.size(), start + static_cast<std::size_t>(batch_size));
    BatchPlan batch;
    for (std::size_t i = start; i < end; ++i) {
      const auto& segs = pool.at(speakers[i]);
      const auto& seg = segs[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(segs.size()) - 1))];
      Eigen::Index offset =
          seg.frames > chunk_len ? rng.uniform_int(0, seg.frames - chunk_len) : 0;
      batch.push_back({speakers[i], seg.index, offset});
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

std::vector<BatchPlan> sample_epoch(const SpeakerPool& pool, int batch_size,
                                    Eigen::Index chunk_len, Rng& rng) {
  std::size_t total = 0;
  for (const auto& [spk, segs] : pool) total += segs.size();
  const std::size_t passes =
      std::max<std::size_t>(1, (total + pool.size() - 1) / std::max<std::size_t>(1, pool.size()));
  std::vector<BatchPlan> batches;
  for (std::size_t p = 0; p < passes; ++p) {
    auto pass = sample_pass(pool, batch_size, chunk_len, rng);
    std::move(pass.begin(), pass.end(), std::back_inserter(batches));
  }
  return batches;
}

void write_model_header(std::ostream& out, const EtdnnConfig& cfg) {
  write_magic(out, "ETDN");
  write_le<std::uint32_t>(out, 1);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.input_dim));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.layers.size()));
  for (const auto& s : cfg.layers) {
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.kind));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.kernel));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.dilation));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.out_channels));
  }
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.n_speakers));
}

EtdnnConfig read_model_header(std::istream& in) {
  expect_magic(in, "ETDN");
  if (auto version = read_le<std::uint32_t>(in); version != 1)
    throw std::runtime_error("unsupported ETDN version " + std::to_string(version));
  EtdnnConfig cfg;
  cfg.input_dim = static_cast<int>(read_le<std::uint32_t>(in));
  auto n_layers = read_le<std::uint32_t>(in);
  if (n_layers > 1024) throw std::runtime_error("implausible ETDN layer count");
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    LayerSpec s;
    auto kind = read_le<std::uint32_t>(in);
    if (kind > 2) throw std::runtime_error("bad ETDN layer kind");
    s.kind = static_cast<LayerKind>(kind);
    s.kernel = static_cast<int>(read_le<std::uint32_t>(in));
    s.dilation = static_cast<int>(read_le<std::uint32_t>(in));
    s.out_channels = static_cast<int>(read_le<std::uint32_t>(in));
    cfg.layers.push_back(s);
  }
  cfg.n_speakers = static_cast<int>(read_le<std::uint32_t>(in));
  cfg.check();
  return cfg;
}

}  // namespace ctsforge
