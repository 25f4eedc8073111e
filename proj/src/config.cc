// config.cc

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

#include "ctsforge/config.h"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "ctsforge/text.h"

namespace ctsforge {

namespace {

std::string to_text(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}
std::string to_text(int v) { return std::to_string(v); }
std::string to_text(std::uint64_t v) { return std::to_string(v); }
std::string to_text(bool v) { return v ? "true" : "false"; }
std::string to_text(const std::string& v) { return v; }
std::string to_text(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + to_text(v[i]);
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
bool from_text(const std::string& s, T& v) {
  return parse_number(trim(s), v);
}
bool from_text(const std::string& s, bool& v) {
  const std::string t = trim(s);
  if (t == "true" || t == "1") return v = true, true;
  if (t == "false" || t == "0") return v = false, true;
  return false;
}
bool from_text(const std::string& s, std::string& v) {
  v = trim(s);
  return true;
}
bool from_text(const std::string& s, std::vector<double>& v) {
  std::vector<double> out;
  std::string_view rest = s;
  while (true) {
    const auto comma = rest.find(',');
    double x;
    if (!parse_number(trim(rest.substr(0, comma)), x)) return false;
    out.push_back(x);
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  v = std::move(out);
  return true;
}

// Calls v(section, key, field, comment) for every configurable value, in
// file order.
template <typename Cfg, typename V>
void visit_fields(Cfg& c, V&& v) {
  v("corpus", "min_dur", c.corpus.min_dur, "lower bound of segment speech duration (s)");
  v("corpus", "max_dur", c.corpus.max_dur, "upper bound of segment speech duration (s)");
  v("corpus", "seed", c.corpus.seed, "segment duration draws");

  v("synth", "n_speakers", c.synth.n_speakers, "synthetic speakers in total");
  v("synth", "sessions_per_speaker", c.synth.sessions_per_speaker, "");
  v("synth", "heldout_speakers", c.synth.heldout_speakers,
    "speakers reserved for the evaluation set");
  v("synth", "min_speech_s", c.synth.min_speech_s, "speech per session (s)");
  v("synth", "max_speech_s", c.synth.max_speech_s, "");
  v("synth", "formant_jitter", c.synth.formant_jitter, "per-session relative jitter");
  v("synth", "noise_files_per_category", c.synth.noise_files_per_category, "");
  v("synth", "noise_duration_s", c.synth.noise_duration_s, "");
  v("synth", "seed", c.synth.seed, "");

  auto& fr = c.frontend.frames;
  v("frontend", "frame_len_ms", fr.frame_len_ms, "baseline recipe value");
  v("frontend", "frame_shift_ms", fr.frame_shift_ms, "baseline recipe value");
  v("frontend", "n_mels", fr.n_mels, "baseline recipe value");
  v("frontend", "fmin", fr.fmin, "Hz, baseline recipe value");
  v("frontend", "fmax", fr.fmax, "Hz, baseline recipe value");
  v("frontend", "preemphasis", fr.preemphasis, "");
  v("frontend", "floor_eps", fr.floor_eps, "energy floor before the log");
  v("frontend", "cms_window_s", c.frontend.cms_window_s, "baseline recipe value");
  v("frontend", "cms_order", c.frontend.cms_order, "drop-then-cms | cms-then-drop");

  auto& sad = c.sad.params;
  v("sad", "floor_quantile", sad.floor_quantile, "");
  v("sad", "noise_ceiling_db", sad.noise_ceiling_db, "");
  v("sad", "margin_db", sad.margin_db, "");
  v("sad", "absolute_floor_db", sad.absolute_floor_db, "");
  v("sad", "median_width", sad.median_width, "frames, odd");

  v("augment", "copies", c.augment.copies, "noise-degraded copies per segment");
  v("augment", "snrs_db", c.augment.snrs_db, "drawn uniformly per copy");
  v("augment", "mask_policy", c.augment.mask_policy, "mild | strong | none");
  v("augment", "mask_on_the_fly", c.augment.mask_on_the_fly,
    "mask training chunks as they are drawn");
  v("augment", "seed", c.augment.seed, "");

  for (auto* p : {&c.mask_mild, &c.mask_strong}) {
    const char* sec = p == &c.mask_mild ? "mask.mild" : "mask.strong";
    v(sec, "n_freq_masks", p->n_freq_masks, "placeholder setting");
    v(sec, "max_freq_width", p->max_freq_width, "mel bins, placeholder setting");
    v(sec, "n_time_masks", p->n_time_masks, "placeholder setting");
    v(sec, "max_time_width", p->max_time_width, "frames, placeholder setting");
  }

  v("net", "frame_channels", c.net.frame_channels, "baseline recipe value");
  v("net", "pool_channels", c.net.pool_channels, "baseline recipe value");
  v("net", "embed_dim", c.net.embed_dim, "baseline recipe value");
  v("net", "am_margin", c.net.am_margin, "baseline recipe value");
  v("net", "am_scale", c.net.am_scale, "baseline recipe value");

  v("train", "epochs", c.train.epochs, "");
  v("train", "base_lr", c.train.base_lr, "baseline recipe value");
  v("train", "momentum", c.train.momentum, "baseline recipe value");
  v("train", "batch_size", c.train.batch_size, "speakers per batch, baseline recipe value");
  v("train", "chunk_frames", c.train.chunk_frames, "baseline recipe value");
  v("train", "first_halving_epoch", c.train.first_halving_epoch, "baseline recipe value");
  v("train", "halving_period", c.train.halving_period, "epochs, baseline recipe value");
  v("train", "seed", c.train.seed, "initialization and sampling");

  v("backend", "lda_dim", c.backend.lda_dim, "baseline recipe value");
  v("backend", "plda_iters", c.backend.plda_iters, "");
  v("backend", "lda_ridge", c.backend.lda_ridge, "relative to trace / D");
  v("backend", "cov_eps", c.backend.cov_eps, "whitening eigenvalue floor");
  v("backend", "originals_only", c.backend.originals_only,
    "fit on clean segments only");
  v("backend", "cosine_input", c.backend.cosine_input, "pre-lda | post-lda");

  v("metrics", "p_targets", c.cost.p_targets, "challenge plan priors");
  v("metrics", "c_miss", c.cost.c_miss, "");
  v("metrics", "c_fa", c.cost.c_fa, "");
}

[[noreturn]] void fail(const std::string& what) { throw ConfigError(what); }

void require(bool ok, const std::string& what) {
  if (!ok) fail(what);
}

}  // namespace

bool PipelineConfig::FrontEnd::operator==(const FrontEnd& o) const {
  const auto& a = frames;
  const auto& b = o.frames;
  return a.frame_len_ms == b.frame_len_ms && a.frame_shift_ms == b.frame_shift_ms &&
         a.n_mels == b.n_mels && a.fmin == b.fmin && a.fmax == b.fmax &&
         a.preemphasis == b.preemphasis && a.floor_eps == b.floor_eps &&
         cms_window_s == o.cms_window_s && cms_order == o.cms_order;
}

bool PipelineConfig::Sad::operator==(const Sad& o) const {
  const auto& a = params;
  const auto& b = o.params;
  return a.frame_len_ms == b.frame_len_ms && a.frame_shift_ms == b.frame_shift_ms &&
         a.floor_quantile == b.floor_quantile && a.noise_ceiling_db == b.noise_ceiling_db &&
         a.margin_db == b.margin_db && a.absolute_floor_db == b.absolute_floor_db &&
         a.median_width == b.median_width;
}

bool PipelineConfig::operator==(const PipelineConfig& o) const {
  auto same_mask = [](const MaskPolicy& a, const MaskPolicy& b) {
    return a.n_freq_masks == b.n_freq_masks && a.max_freq_width == b.max_freq_width &&
           a.n_time_masks == b.n_time_masks && a.max_time_width == b.max_time_width;
  };
  return corpus == o.corpus && synth == o.synth && frontend == o.frontend &&
         sad == o.sad && augment == o.augment && same_mask(mask_mild, o.mask_mild) &&
         same_mask(mask_strong, o.mask_strong) && net == o.net && train == o.train &&
         backend == o.backend && cost.p_targets == o.cost.p_targets &&
         cost.c_miss == o.cost.c_miss && cost.c_fa == o.cost.c_fa;
}

void PipelineConfig::check() const {
  require(corpus.min_dur > 0.0 && corpus.max_dur >= corpus.min_dur,
          "corpus: need 0 < min_dur <= max_dur");
  require(synth.n_speakers >= 2, "synth: n_speakers must be at least 2");
  require(synth.sessions_per_speaker >= 1, "synth: sessions_per_speaker must be positive");
  require(synth.heldout_speakers >= 0 && synth.heldout_speakers < synth.n_speakers,
          "synth: heldout_speakers must be in [0, n_speakers)");
  require(synth.min_speech_s > 0.0 && synth.max_speech_s >= synth.min_speech_s,
          "synth: need 0 < min_speech_s <= max_speech_s");
  require(synth.noise_files_per_category >= 0 && synth.noise_duration_s > 0.0,
          "synth: bad noise settings");
  try {
    frontend.frames.check(kTelephoneRate);
  } catch (const std::invalid_argument& e) {
    fail(std::string("frontend: ") + e.what());
  }
  require(frontend.cms_window_s > 0.0, "frontend: cms_window_s must be positive");
  require(frontend.cms_order == "drop-then-cms" || frontend.cms_order == "cms-then-drop",
          "frontend: cms_order must be drop-then-cms or cms-then-drop");
  require(sad.params.floor_quantile >= 0.0 && sad.params.floor_quantile <= 1.0,
          "sad: floor_quantile must be in [0, 1]");
  require(sad.params.median_width >= 1 && sad.params.median_width % 2 == 1,
          "sad: median_width must be a positive odd number");
  require(augment.copies >= 0, "augment: copies must be non-negative");
  require(!augment.snrs_db.empty(), "augment: snrs_db is empty");
  require(augment.mask_policy == "mild" || augment.mask_policy == "strong" ||
              augment.mask_policy == "none",
          "augment: mask_policy must be mild, strong or none");
  for (const auto* p : {&mask_mild, &mask_strong})
    require(p->n_freq_masks >= 0 && p->max_freq_width >= 0 && p->n_time_masks >= 0 &&
                p->max_time_width >= 0,
            "mask: counts and widths must be non-negative");
  require(net.frame_channels > 0 && net.pool_channels > 0 && net.embed_dim > 0,
          "net: widths must be positive");
  require(net.am_scale > 0.0 && net.am_margin >= 0.0, "net: bad AM-softmax parameters");
  require(train.epochs >= 1, "train: epochs must be positive");
  require(train.base_lr > 0.0, "train: base_lr must be positive");
  require(train.momentum >= 0.0 && train.momentum < 1.0, "train: momentum must be in [0, 1)");
  require(train.batch_size >= 1 && train.chunk_frames >= 1,
          "train: batch_size and chunk_frames must be positive");
  require(train.first_halving_epoch >= 0 && train.halving_period >= 1,
          "train: bad learning-rate schedule");
  require(backend.lda_dim >= 1 && backend.plda_iters >= 0, "backend: bad lda_dim or plda_iters");
  require(backend.lda_ridge >= 0.0 && backend.cov_eps > 0.0, "backend: bad regularization");
  require(backend.cosine_input == "pre-lda" || backend.cosine_input == "post-lda",
          "backend: cosine_input must be pre-lda or post-lda");
  try {
    cost.check();
  } catch (const std::invalid_argument& e) {
    fail(std::string("metrics: ") + e.what());
  }
}

FrontEndConfig PipelineConfig::front_end_config() const {
  FrontEndConfig f;
  f.frames = frontend.frames;
  f.sad = sad.params;
  f.sad.frame_len_ms = frontend.frames.frame_len_ms;
  f.sad.frame_shift_ms = frontend.frames.frame_shift_ms;
  f.cms_window_s = frontend.cms_window_s;
  f.order = frontend.cms_order == "cms-then-drop" ? CmsOrder::kCmsThenDrop
                                                  : CmsOrder::kDropThenCms;
  return f;
}

SegmenterConfig PipelineConfig::segmenter_config() const {
  return {corpus.min_dur, corpus.max_dur, corpus.seed};
}

MaskPolicy PipelineConfig::mask_policy() const {
  if (augment.mask_policy == "mild") return mask_mild;
  if (augment.mask_policy == "strong") return mask_strong;
  return {"none", 0, 0, 0, 0};
}

EtdnnConfig PipelineConfig::etdnn_config(int n_speakers, int input_dim) const {
  return EtdnnConfig::desk(n_speakers, input_dim, net.frame_channels, net.pool_channels,
                           net.embed_dim);
}

PipelineConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    fail("config line " + std::to_string(e.line()) + ": " + e.message());
  }

  PipelineConfig cfg;
  std::map<std::string, std::map<std::string, std::function<bool(const std::string&)>>>
      setters;
  visit_fields(cfg, [&](const char* sec, const char* key, auto& field, const char*) {
    setters[sec][key] = [&field](const std::string& s) { return from_text(s, field); };
  });

  for (const auto& [section, body] : tree) {
    if (body.empty())
      fail("config: key '" + section + "' outside of any section");
    auto sit = setters.find(section);
    if (sit == setters.end()) fail("config: unknown section [" + section + "]");
    for (const auto& [key, value] : body) {
      auto kit = sit->second.find(key);
      if (kit == sit->second.end())
        fail("config: unknown key '" + key + "' in [" + section + "]");
      if (!kit->second(value.data()))
        fail("config: bad value '" + value.data() + "' for " + section + "." + key);
    }
  }
  cfg.check();
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const PipelineConfig& cfg) {
  std::ostringstream out;
  std::string current;
  visit_fields(cfg, [&](const char* sec, const char* key, const auto& field,
                        const char* comment) {
    if (current != sec) {
      out << (current.empty() ? "" : "\n") << '[' << sec << "]\n";
      current = sec;
    }
    if (*comment) out << "; " << comment << '\n';
    out << key << " = " << to_text(field) << '\n';
  });
  return out.str();
}

}  // namespace ctsforge
