// pipeline.cc

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

#include "ctsforge/pipeline.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "ctsforge/fmat.h"
#include "ctsforge/text.h"

namespace ctsforge {

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers =
      std::min(static_cast<std::size_t>(std::max(jobs, 1)), std::max<std::size_t>(n, 1));
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  auto work = [&] {
    for (std::size_t i; !failed && (i = next++) < n;) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
        failed = true;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

namespace {

using Tsv = std::vector<std::vector<std::string>>;

Tsv read_tsv_rows(const fs::path& path, std::size_t columns) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  Tsv rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto cols = split_tabs(line);
    if (cols.size() != columns)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected " +
                               std::to_string(columns) + " columns");
    rows.emplace_back(cols.begin(), cols.end());
  }
  return rows;
}

std::ofstream open_text(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

fs::path resolve(const fs::path& base_file, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base_file.parent_path() / path;
}

std::string relative_to(const fs::path& target, const fs::path& base_file) {
  return fs::absolute(target)
      .lexically_relative(fs::absolute(base_file).parent_path())
      .generic_string();
}

std::int64_t parse_int64(const std::string& s, const fs::path& path) {
  std::int64_t v;
  if (!parse_number(s, v)) throw std::runtime_error(path.string() + ": bad integer '" + s + "'");
  return v;
}

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// Dense 0..K-1 class labels in order of increasing speakerid.
std::vector<int> dense_labels(const std::vector<std::int64_t>& speakers, int* n_classes) {
  std::map<std::int64_t, int> index;
  for (auto s : speakers) index.emplace(s, 0);
  int k = 0;
  for (auto& [s, i] : index) i = k++;
  std::vector<int> out;
  out.reserve(speakers.size());
  for (auto s : speakers) out.push_back(index.at(s));
  if (n_classes) *n_classes = k;
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Plumbing formats

Manifest read_manifest(const fs::path& path) {
  Manifest m;
  std::set<std::string> seen;
  for (auto& row : read_tsv_rows(path, 3)) {
    if (!seen.insert(row[0]).second)
      throw std::runtime_error(path.string() + ": duplicate segmentid " + row[0]);
    m.push_back({row[0], resolve(path, row[1]), parse_int64(row[2], path)});
  }
  return m;
}

void write_manifest(const fs::path& path, const Manifest& manifest) {
  auto out = open_text(path);
  for (const auto& e : manifest)
    out << e.segmentid << '\t' << relative_to(e.path, path) << '\t' << e.speakerid << '\n';
}

Manifest manifest_from_metadata(const fs::path& metadata_path) {
  Manifest m;
  for (const auto& r : parse_metadata(metadata_path))
    m.push_back({r.segmentid, resolve(metadata_path, r.filename), r.speakerid});
  return m;
}

bool is_augmented_id(std::string_view segmentid) {
  return segmentid.find("__") != std::string_view::npos;
}

std::vector<SessionEntry> read_sessions(const fs::path& path) {
  std::vector<SessionEntry> out;
  for (auto& row : read_tsv_rows(path, 7)) {
    SessionEntry e;
    e.sessionid = row[0];
    e.subjectid = row[1];
    if (row[2] == "male")
      e.gender = Gender::kMale;
    else if (row[2] == "female")
      e.gender = Gender::kFemale;
    else
      throw std::runtime_error(path.string() + ": unknown gender " + row[2]);
    e.corpusid = row[3];
    e.phoneid = row[4];
    e.language = row[5];
    e.path = resolve(path, row[6]);
    out.push_back(std::move(e));
  }
  return out;
}

void write_sessions(const fs::path& path, const std::vector<SessionEntry>& sessions) {
  auto out = open_text(path);
  for (const auto& s : sessions)
    out << s.sessionid << '\t' << s.subjectid << '\t' << to_string(s.gender) << '\t'
        << s.corpusid << '\t' << s.phoneid << '\t' << s.language << '\t'
        << relative_to(s.path, path) << '\n';
}

void write_embeddings(const fs::path& path, const EmbeddingArchive& archive) {
  if (archive.ids.size() != static_cast<std::size_t>(archive.vectors.rows()))
    throw std::invalid_argument("write_embeddings: row count mismatch");
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_fmat(path, archive.vectors);
  auto out = open_text(fs::path(path).concat(".tsv"));
  for (std::size_t i = 0; i < archive.ids.size(); ++i)
    out << archive.ids[i] << '\t' << i << '\n';
}

EmbeddingArchive read_embeddings(const fs::path& path) {
  EmbeddingArchive a;
  a.vectors = read_fmat(path);
  const fs::path side = fs::path(path).concat(".tsv");
  for (auto& row : read_tsv_rows(side, 2)) {
    if (parse_int64(row[1], side) != static_cast<std::int64_t>(a.ids.size()))
      throw std::runtime_error(side.string() + ": rows must be listed in order");
    a.ids.push_back(row[0]);
  }
  if (a.ids.size() != static_cast<std::size_t>(a.vectors.rows()))
    throw std::runtime_error(side.string() + ": " + std::to_string(a.ids.size()) +
                             " ids for " + std::to_string(a.vectors.rows()) + " rows");
  return a;
}

void write_run_log(const fs::path& path, const std::string& stage,
                   const PipelineConfig& cfg,
                   const std::map<std::string, std::string>& details) {
  auto out = open_text(path);
  out << "# ctsforge " << stage << '\n';
  for (const auto& [k, v] : details) out << "# " << k << ": " << v << '\n';
  out << serialize_config(cfg);
}

// ---------------------------------------------------------------------------
// Stages

SynthOutputs run_synth(const PipelineConfig& cfg, const fs::path& out_dir, int jobs) {
  cfg.check();
  SynthConfig sc;
  sc.n_speakers = cfg.synth.n_speakers;
  sc.sessions_per_speaker = cfg.synth.sessions_per_speaker;
  sc.seed = cfg.synth.seed;
  sc.min_speech_s = cfg.synth.min_speech_s;
  sc.max_speech_s = cfg.synth.max_speech_s;
  sc.formant_jitter = cfg.synth.formant_jitter;
  auto sessions = generate_synthetic_corpus(sc);

  const int n_train = cfg.synth.n_speakers - cfg.synth.heldout_speakers;
  SynthOutputs outs{out_dir / "train" / "sessions.tsv", out_dir / "eval" / "sessions.tsv",
                    out_dir / "noise" / "manifest.tsv"};
  std::vector<SessionEntry> train, eval;
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    const auto& s = sessions[i];
    const bool is_train =
        static_cast<int>(i) / cfg.synth.sessions_per_speaker < n_train;
    const fs::path dir = out_dir / (is_train ? "train" : "eval") / "audio";
    (is_train ? train : eval)
        .push_back({s.sessionid, s.subjectid, s.gender, s.corpusid, s.phoneid, s.language,
                    dir / (s.sessionid + ".wav")});
  }
  fs::create_directories(out_dir / "train" / "audio");
  fs::create_directories(out_dir / "eval" / "audio");
  parallel_for(sessions.size(), jobs, [&](std::size_t i) {
    const auto& s = sessions[i];
    const bool is_train = i < train.size();
    write_wav((is_train ? train[i] : eval[i - train.size()]).path, s.audio);
  });
  write_sessions(outs.train_sessions, train);
  write_sessions(outs.eval_sessions, eval);

  std::vector<NoiseEntry> noise;
  for (auto cat : {NoiseCategory::kBabble, NoiseCategory::kNoise, NoiseCategory::kMusic})
    for (int k = 0; k < cfg.synth.noise_files_per_category; ++k)
      noise.push_back({out_dir / "noise" /
                           (std::string(to_string(cat)) + "_" + std::to_string(k) + ".wav"),
                       cat});
  fs::create_directories(out_dir / "noise");
  parallel_for(noise.size(), jobs, [&](std::size_t i) {
    auto sample = make_noise(noise[i].category, cfg.synth.noise_duration_s,
                             derive_seed(cfg.synth.seed, noise[i].path.filename().string()));
    write_wav(noise[i].path, sample.waveform);
  });
  write_noise_manifest(outs.noise_manifest, noise);
  write_run_log(out_dir / "synth.log", "synth", cfg,
                {{"synth.seed", std::to_string(cfg.synth.seed)},
                 {"train_speakers", std::to_string(n_train)},
                 {"eval_speakers", std::to_string(cfg.synth.heldout_speakers)}});
  return outs;
}

std::vector<SegmentRecord> run_segment(const PipelineConfig& cfg,
                                       const fs::path& sessions_tsv,
                                       const fs::path& out_dir, int jobs) {
  cfg.check();
  const auto sessions = read_sessions(sessions_tsv);
  const FrontEndConfig fe = cfg.front_end_config();
  const SegmenterConfig seg = cfg.segmenter_config();
  fs::create_directories(out_dir / "wav");

  std::vector<std::vector<SegmentRecord>> per_session(sessions.size());
  parallel_for(sessions.size(), jobs, [&](std::size_t i) {
    const auto& s = sessions[i];
    const Waveform w = read_wav(s.path);
    const SadMarks sad = detect_speech(w, fe.sad);
    const SessionTimeline timeline = speech_timeline(sad, fe.sad, w.duration(), s.sessionid);
    if (timeline.speech_intervals.empty()) return;
    const auto segments = extract_segments(timeline, seg);
    for (std::size_t k = 0; k < segments.size(); ++k) {
      const auto& span = segments[k].span;
      const auto sr = static_cast<double>(w.sample_rate);
      const auto i0 = std::clamp<Eigen::Index>(
          static_cast<Eigen::Index>(std::floor(span.front().start * sr)), 0, w.size());
      const auto i1 = std::clamp<Eigen::Index>(
          static_cast<Eigen::Index>(std::ceil(span.back().end * sr)), i0, w.size());
      char idx[16];
      std::snprintf(idx, sizeof idx, "_%03zu", k);
      SegmentRecord r;
      r.segmentid = s.sessionid + idx;
      r.filename = "wav/" + r.segmentid + ".wav";
      r.subjectid = s.subjectid;
      r.speech_duration = std::round(segments[k].speech_dur * 100.0) / 100.0;
      r.sessionid = s.sessionid;
      r.corpusid = s.corpusid;
      r.phoneid = s.phoneid;
      r.gender = s.gender;
      r.language = s.language;
      Waveform piece;
      piece.sample_rate = w.sample_rate;
      piece.samples = w.samples.segment(i0, i1 - i0);
      write_wav(out_dir / r.filename, piece);
      per_session[i].push_back(std::move(r));
    }
  });

  std::vector<SegmentRecord> records;
  for (auto& v : per_session)
    for (auto& r : v) records.push_back(std::move(r));
  assign_speaker_ids(records);
  const std::string seeds = "segmenter seed=" + std::to_string(seg.rng_seed) +
                            " min_dur=" + fmt_g(seg.min_dur) + " max_dur=" + fmt_g(seg.max_dur);
  write_metadata(out_dir / "metadata.tsv", records, {seeds});
  write_run_log(out_dir / "segment.log", "segment", cfg,
                {{"corpus.seed", std::to_string(seg.rng_seed)},
                 {"sessions", std::to_string(sessions.size())},
                 {"segments", std::to_string(records.size())}});
  return records;
}

Manifest run_augment(const PipelineConfig& cfg, const Manifest& input,
                     const fs::path& noise_manifest, const fs::path& out_dir, int jobs) {
  cfg.check();
  const auto entries = read_noise_manifest(noise_manifest);
  if (entries.empty()) throw std::runtime_error("augment: empty noise manifest");
  std::vector<NoiseSample> noise;
  for (const auto& e : entries) noise.push_back({read_wav(e.path), e.category});
  fs::create_directories(out_dir / "wav");

  const auto copies = static_cast<std::size_t>(cfg.augment.copies);
  std::vector<ManifestEntry> out(input.size() * copies);
  parallel_for(input.size(), jobs, [&](std::size_t i) {
    const auto& item = input[i];
    const Waveform speech = read_wav(item.path);
    for (std::size_t c = 0; c < copies; ++c) {
      const std::uint64_t seed =
          derive_seed(cfg.augment.seed, item.segmentid + "/" + std::to_string(c));
      Rng rng(seed);
      const auto& n = noise[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(noise.size()) - 1))];
      const double snr = pick_snr(rng, cfg.augment.snrs_db);
      const MixResult mix = mix_noise(speech, n, snr, rng);
      const std::string name = augmented_name(item.segmentid, to_string(n.category), seed);
      const fs::path path = out_dir / "wav" / name;
      write_wav(path, mix.mixed);
      out[i * copies + c] = {fs::path(name).stem().string(), path, item.speakerid};
    }
  });
  write_manifest(out_dir / "augmented.tsv", out);
  write_run_log(out_dir / "augment.log", "augment", cfg,
                {{"augment.seed", std::to_string(cfg.augment.seed)},
                 {"inputs", std::to_string(input.size())},
                 {"outputs", std::to_string(out.size())}});
  return out;
}

Manifest run_featurize(const PipelineConfig& cfg, const Manifest& input,
                       const fs::path& out_dir, int jobs) {
  cfg.check();
  const FrontEndConfig fe = cfg.front_end_config();
  fs::create_directories(out_dir / "feats");
  Manifest out(input.size());
  parallel_for(input.size(), jobs, [&](std::size_t i) {
    const auto& item = input[i];
    FeatureMatrix f;
    try {
      f = front_end(read_wav(item.path), fe);
    } catch (const std::exception& e) {
      throw std::runtime_error("featurize " + item.segmentid + ": " + e.what());
    }
    const fs::path path = out_dir / "feats" / (item.segmentid + ".fmat");
    write_fmat(path, f.values);
    out[i] = {item.segmentid, path, item.speakerid};
  });
  write_manifest(out_dir / "features.tsv", out);
  write_run_log(out_dir / "featurize.log", "featurize", cfg,
                {{"items", std::to_string(input.size())}});
  return out;
}

std::vector<TrainLogRow> run_train(const PipelineConfig& cfg, const Manifest& features,
                                   const fs::path& out_dir) {
  cfg.check();
  if (features.empty()) throw std::runtime_error("train: no training features");
  std::vector<std::int64_t> speakers;
  for (const auto& f : features) speakers.push_back(f.speakerid);
  int n_classes = 0;
  const std::vector<int> labels = dense_labels(speakers, &n_classes);

  std::vector<MatrixX<float>> feats;
  feats.reserve(features.size());
  SpeakerPool pool;
  for (std::size_t i = 0; i < features.size(); ++i) {
    feats.push_back(read_fmat(features[i].path).cast<float>());
    if (feats.back().rows() == 0)
      throw std::runtime_error("train: empty features for " + features[i].segmentid);
    pool[labels[i]].push_back({i, feats.back().rows()});
  }
  const int input_dim = static_cast<int>(feats.front().cols());
  for (const auto& f : feats)
    if (f.cols() != input_dim) throw std::runtime_error("train: feature dimension mismatch");

  const EtdnnConfig net = cfg.etdnn_config(n_classes, input_dim);
  const AmSoftmaxParams am = cfg.am_params();
  const MaskPolicy mask = cfg.mask_policy();
  const bool masking = cfg.augment.mask_on_the_fly && cfg.augment.mask_policy != "none";
  auto model = init_model<float>(net, derive_seed(cfg.train.seed, "init"));
  auto state = init_train_state(model, cfg.train.base_lr, cfg.train.momentum,
                                cfg.train.batch_size);

  std::vector<TrainLogRow> log;
  int step = 0;
  for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
    state.epoch = epoch;
    const double lr = lr_schedule(epoch, cfg.train.base_lr, cfg.train.first_halving_epoch,
                                  cfg.train.halving_period);
    Rng rng(derive_seed(cfg.train.seed, "epoch/" + std::to_string(epoch)));
    Rng mask_rng(derive_seed(cfg.train.seed, "mask/" + std::to_string(epoch)));
    const auto plans = sample_epoch(pool, cfg.train.batch_size, cfg.train.chunk_frames, rng);
    for (const auto& plan : plans) {
      std::vector<MatrixX<float>> chunks;
      std::vector<int> batch_labels;
      for (const auto& ref : plan) {
        MatrixX<float> c = cut_chunk(feats[ref.segment], ref.offset, cfg.train.chunk_frames);
        if (masking) {
          FeatureMatrix fm{c.cast<double>(), cfg.frontend.frames.frame_shift_ms};
          c = spec_mask(fm, mask, mask_rng).values.cast<float>();
        }
        chunks.push_back(std::move(c));
        batch_labels.push_back(ref.speaker);
      }
      auto lg = loss_and_gradient(model, chunks, batch_labels, am);
      sgd_step(state, model, lg.grad, lr);
      log.push_back({epoch, step++, lr, static_cast<double>(lg.loss),
                     static_cast<double>(lg.correct) / static_cast<double>(plan.size())});
    }
  }

  fs::create_directories(out_dir);
  write_model(out_dir / "model.etdn", model);
  auto out = open_text(out_dir / "train_log.tsv");
  out << "epoch\tstep\tlr\tloss\taccuracy\n";
  for (const auto& r : log)
    out << r.epoch << '\t' << r.step << '\t' << fmt_g(r.lr) << '\t' << format_fixed(r.loss, 6)
        << '\t' << format_fixed(r.accuracy, 4) << '\n';
  write_run_log(out_dir / "train.log", "train", cfg,
                {{"train.seed", std::to_string(cfg.train.seed)},
                 {"init_seed", std::to_string(derive_seed(cfg.train.seed, "init"))},
                 {"segments", std::to_string(features.size())},
                 {"speakers", std::to_string(n_classes)},
                 {"steps", std::to_string(step)}});
  return log;
}

EmbeddingArchive run_extract(const PipelineConfig& cfg, const fs::path& model_path,
                             const Manifest& features, const fs::path& out_path, int jobs) {
  cfg.check();
  const auto model = read_model<float>(model_path);
  EmbeddingArchive a;
  a.vectors.resize(static_cast<Eigen::Index>(features.size()), model.config.embed_dim());
  parallel_for(features.size(), jobs, [&](std::size_t i) {
    MatrixX<float> f = read_fmat(features[i].path).cast<float>();
    if (f.cols() != model.config.input_dim)
      throw std::runtime_error("extract: " + features[i].segmentid +
                               " has the wrong feature dimension");
    a.vectors.row(static_cast<Eigen::Index>(i)) =
        extract_embedding(model, f).cast<double>().transpose();
  });
  for (const auto& f : features) a.ids.push_back(f.segmentid);
  write_embeddings(out_path, a);
  write_run_log(fs::path(out_path).concat(".log"), "extract", cfg,
                {{"model", model_path.filename().string()},
                 {"segments", std::to_string(features.size())}});
  return a;
}

void run_train_backend(const PipelineConfig& cfg, const fs::path& embeddings,
                       const Manifest& labels, const fs::path& out_dir) {
  cfg.check();
  const EmbeddingArchive a = read_embeddings(embeddings);
  std::map<std::string, std::int64_t> speaker_of;
  for (const auto& e : labels) speaker_of.emplace(e.segmentid, e.speakerid);
  std::vector<Eigen::Index> keep;
  for (std::size_t i = 0; i < a.ids.size(); ++i)
    if (!cfg.backend.originals_only || !is_augmented_id(a.ids[i]))
      keep.push_back(static_cast<Eigen::Index>(i));
  if (keep.empty()) throw std::runtime_error("train-backend: no embeddings selected");
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(keep.size()), a.vectors.cols());
  std::vector<std::int64_t> speakers;
  for (std::size_t r = 0; r < keep.size(); ++r) {
    rows.row(static_cast<Eigen::Index>(r)) = a.vectors.row(keep[r]);
    const auto& id = a.ids[static_cast<std::size_t>(keep[r])];
    auto it = speaker_of.find(id);
    if (it == speaker_of.end())
      throw std::runtime_error("train-backend: no speaker label for " + id);
    speakers.push_back(it->second);
  }
  int n_classes = 0;
  const auto classes = dense_labels(speakers, &n_classes);

  const Gaussianizer gauss = fit_center_whiten(rows, cfg.backend.cov_eps);
  const Eigen::MatrixXd normed = apply_backend(gauss, nullptr, rows);
  const LdaTransform lda = fit_lda(normed, classes, cfg.backend.lda_dim, cfg.backend.lda_ridge);
  const PldaFit plda = fit_plda_em(lda.apply(normed), classes, cfg.backend.plda_iters);

  fs::create_directories(out_dir);
  write_gaussianizer(out_dir / "gauss.bin", gauss);
  write_lda(out_dir / "lda.bin", lda);
  write_plda(out_dir / "plda.bin", plda.model);
  std::map<std::string, std::string> details{
      {"vectors", std::to_string(keep.size())},
      {"speakers", std::to_string(n_classes)},
      {"plda_loglik_first", fmt_g(plda.log_likelihood.front())},
      {"plda_loglik_last", fmt_g(plda.log_likelihood.back())}};
  for (std::size_t i = 0; i < plda.warnings.size(); ++i)
    details["warning_" + std::to_string(i)] = plda.warnings[i];
  write_run_log(out_dir / "train-backend.log", "train-backend", cfg, details);
}

TrialKey make_all_pairs_key(const Manifest& segments) {
  TrialKey key;
  std::vector<const ManifestEntry*> keep;
  for (const auto& e : segments)
    if (!is_augmented_id(e.segmentid)) keep.push_back(&e);
  for (std::size_t a = 0; a < keep.size(); ++a)
    for (std::size_t b = a + 1; b < keep.size(); ++b)
      key.trials.push_back({keep[a]->segmentid, keep[b]->segmentid,
                            keep[a]->speakerid == keep[b]->speakerid});
  key.check();
  return key;
}

ScoreBackend parse_score_backend(std::string_view s) {
  if (s == "cosine") return ScoreBackend::kCosine;
  if (s == "plda") return ScoreBackend::kPlda;
  throw std::invalid_argument("unknown backend '" + std::string(s) + "' (cosine | plda)");
}

std::vector<std::pair<TrialId, double>> run_score(const PipelineConfig& cfg,
                                                  const fs::path& backend_dir,
                                                  const fs::path& embeddings,
                                                  const fs::path& trials,
                                                  ScoreBackend kind,
                                                  const fs::path& out_path) {
  cfg.check();
  const EmbeddingArchive a = read_embeddings(embeddings);
  const TrialKey key = read_trial_key(trials);
  const Gaussianizer gauss = read_gaussianizer(backend_dir / "gauss.bin");
  const LdaTransform lda = read_lda(backend_dir / "lda.bin");
  const bool use_lda = kind == ScoreBackend::kPlda || cfg.backend.cosine_input == "post-lda";
  const Eigen::MatrixXd vecs = apply_backend(gauss, use_lda ? &lda : nullptr, a.vectors);

  std::map<std::string, Eigen::Index> row;
  for (std::size_t i = 0; i < a.ids.size(); ++i)
    row.emplace(a.ids[i], static_cast<Eigen::Index>(i));
  auto lookup = [&](const std::string& id) {
    auto it = row.find(id);
    if (it == row.end()) throw std::runtime_error("score: no embedding for " + id);
    return vecs.row(it->second).transpose().eval();
  };

  std::vector<std::pair<TrialId, double>> scores;
  scores.reserve(key.trials.size());
  if (kind == ScoreBackend::kCosine) {
    for (const auto& t : key.trials)
      scores.push_back({{t.enroll, t.test}, cosine_score(lookup(t.enroll), lookup(t.test))});
  } else {
    const PldaScorer scorer(read_plda(backend_dir / "plda.bin"));
    for (const auto& t : key.trials)
      scores.push_back({{t.enroll, t.test}, scorer.score(lookup(t.enroll), lookup(t.test))});
  }
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  write_scores(out_path, scores);
  write_run_log(fs::path(out_path).concat(".log"), "score", cfg,
                {{"backend", kind == ScoreBackend::kCosine ? "cosine" : "plda"},
                 {"trials", std::to_string(key.trials.size())}});
  return scores;
}

EvalReport run_evaluate(const PipelineConfig& cfg, const fs::path& scores,
                        const fs::path& trials, const fs::path& out_dir) {
  cfg.check();
  const EvalReport r = evaluate(read_scores(scores), read_trial_key(trials), cfg.cost);
  fs::create_directories(out_dir);
  open_text(out_dir / "report.txt") << r.render_table();
  open_text(out_dir / "report.tsv") << r.render_tsv();
  write_run_log(out_dir / "evaluate.log", "evaluate", cfg,
                {{"scores", scores.filename().string()}});
  return r;
}

FullRunResult run_full_pipeline(const PipelineConfig& cfg, const fs::path& work_dir,
                                int jobs) {
  const fs::path w = work_dir;
  const SynthOutputs corpus = run_synth(cfg, w / "corpus", jobs);
  run_segment(cfg, corpus.train_sessions, w / "train_seg", jobs);
  run_segment(cfg, corpus.eval_sessions, w / "eval_seg", jobs);

  const Manifest train_audio = manifest_from_metadata(w / "train_seg" / "metadata.tsv");
  const Manifest eval_audio = manifest_from_metadata(w / "eval_seg" / "metadata.tsv");
  Manifest train_feats = run_featurize(cfg, train_audio, w / "train_feats", jobs);
  if (cfg.augment.copies > 0) {
    const Manifest aug =
        run_augment(cfg, train_audio, corpus.noise_manifest, w / "train_aug", jobs);
    const Manifest aug_feats = run_featurize(cfg, aug, w / "train_aug_feats", jobs);
    Manifest all = train_feats;
    all.insert(all.end(), aug_feats.begin(), aug_feats.end());
    run_train(cfg, all, w / "model");
  } else {
    run_train(cfg, train_feats, w / "model");
  }
  const Manifest eval_feats = run_featurize(cfg, eval_audio, w / "eval_feats", jobs);

  const fs::path model = w / "model" / "model.etdn";
  run_extract(cfg, model, train_feats, w / "emb" / "train.fmat", jobs);
  run_extract(cfg, model, eval_feats, w / "emb" / "eval.fmat", jobs);
  run_train_backend(cfg, w / "emb" / "train.fmat", train_feats, w / "backend");
  write_trial_key(w / "trials.tsv", make_all_pairs_key(eval_feats));

  FullRunResult r;
  r.cosine_scores = w / "scores" / "cosine.tsv";
  r.plda_scores = w / "scores" / "plda.tsv";
  run_score(cfg, w / "backend", w / "emb" / "eval.fmat", w / "trials.tsv",
            ScoreBackend::kCosine, r.cosine_scores);
  run_score(cfg, w / "backend", w / "emb" / "eval.fmat", w / "trials.tsv", ScoreBackend::kPlda,
            r.plda_scores);
  r.cosine = run_evaluate(cfg, r.cosine_scores, w / "trials.tsv", w / "eval_cosine");
  r.plda = run_evaluate(cfg, r.plda_scores, w / "trials.tsv", w / "eval_plda");
  return r;
}

}  // namespace ctsforge
