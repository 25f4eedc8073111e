// ctsforge/pipeline.h

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

// File-level pipeline stages. Each stage reads the previous stage's files,
// writes its own outputs plus a run log "<stage>.log" next to them, and
// produces the same bytes for the same inputs, config and seeds whatever the
// worker count.

#ifndef CTSFORGE_PIPELINE_H_
#define CTSFORGE_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ctsforge/config.h"

namespace ctsforge {

namespace fs = std::filesystem;

/// Runs fn(0) ... fn(n - 1) on up to `jobs` threads. The first exception
/// (lowest index) is rethrown after all workers stop.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

// ---------------------------------------------------------------------------
// Plumbing formats

/// TSV "segmentid<TAB>path<TAB>speakerid"; relative paths are resolved
/// against the manifest's directory on read and written relative to it.
struct ManifestEntry {
  std::string segmentid;
  fs::path path;
  std::int64_t speakerid = 0;
};
using Manifest = std::vector<ManifestEntry>;

Manifest read_manifest(const fs::path& path);
void write_manifest(const fs::path& path, const Manifest& manifest);

/// Audio manifest for the segments of a metadata file.
Manifest manifest_from_metadata(const fs::path& metadata_path);

/// Segment ids made by augmented_name() contain "__".
bool is_augmented_id(std::string_view segmentid);

/// Session list written by the synthesizer: sessionid, subjectid, gender,
/// corpusid, phoneid, language, path.
struct SessionEntry {
  std::string sessionid;
  std::string subjectid;
  Gender gender = Gender::kMale;
  std::string corpusid;
  std::string phoneid;
  std::string language;
  fs::path path;
};

std::vector<SessionEntry> read_sessions(const fs::path& path);
void write_sessions(const fs::path& path, const std::vector<SessionEntry>& sessions);

/// FMAT matrix of embeddings plus a sidecar "<path>.tsv" with
/// "segmentid<TAB>row" per row.
struct EmbeddingArchive {
  std::vector<std::string> ids;
  Eigen::MatrixXd vectors;
};

void write_embeddings(const fs::path& path, const EmbeddingArchive& archive);
EmbeddingArchive read_embeddings(const fs::path& path);

/// Resolved config (as INI) and the seeds in effect, no timestamps.
void write_run_log(const fs::path& path, const std::string& stage,
                   const PipelineConfig& cfg,
                   const std::map<std::string, std::string>& details);

// ---------------------------------------------------------------------------
// Stages

struct SynthOutputs {
  fs::path train_sessions;
  fs::path eval_sessions;
  fs::path noise_manifest;
};

/// Synthetic corpus under out_dir: train/ and eval/ session lists and audio
/// (eval holds the last heldout_speakers speakers) and noise/ samples.
SynthOutputs run_synth(const PipelineConfig& cfg, const fs::path& out_dir, int jobs);

/// SAD on each session, segment cutting, one WAV per segment covering the
/// span from its first to its last speech interval. Writes
/// out_dir/metadata.tsv and out_dir/wav/.
std::vector<SegmentRecord> run_segment(const PipelineConfig& cfg,
                                       const fs::path& sessions_tsv,
                                       const fs::path& out_dir, int jobs);

/// Noise-degraded copies of each input. Writes out_dir/wav/ and
/// out_dir/augmented.tsv.
Manifest run_augment(const PipelineConfig& cfg, const Manifest& input,
                     const fs::path& noise_manifest, const fs::path& out_dir, int jobs);

/// Front end on each input. Writes out_dir/feats/<segmentid>.fmat and
/// out_dir/features.tsv.
Manifest run_featurize(const PipelineConfig& cfg, const Manifest& input,
                       const fs::path& out_dir, int jobs);

struct TrainLogRow {
  int epoch;
  int step;
  double lr;
  double loss;
  double accuracy;
};

/// Trains the extractor on the union of the feature manifests. Writes
/// out_dir/model.etdn and out_dir/train_log.tsv.
std::vector<TrainLogRow> run_train(const PipelineConfig& cfg, const Manifest& features,
                                   const fs::path& out_dir);

EmbeddingArchive run_extract(const PipelineConfig& cfg, const fs::path& model_path,
                             const Manifest& features, const fs::path& out_path, int jobs);

/// Fits centering/whitening, LDA and PLDA on the archived embeddings, with
/// speaker labels looked up in `labels`. Writes gauss.bin, lda.bin and
/// plda.bin into out_dir.
void run_train_backend(const PipelineConfig& cfg, const fs::path& embeddings,
                       const Manifest& labels, const fs::path& out_dir);

/// Every unordered pair of non-augmented segments, in manifest order, target
/// when the speakers match.
TrialKey make_all_pairs_key(const Manifest& segments);

enum class ScoreBackend { kCosine, kPlda };
ScoreBackend parse_score_backend(std::string_view s);

std::vector<std::pair<TrialId, double>> run_score(const PipelineConfig& cfg,
                                                  const fs::path& backend_dir,
                                                  const fs::path& embeddings,
                                                  const fs::path& trials,
                                                  ScoreBackend kind,
                                                  const fs::path& out_path);

/// Writes out_dir/report.txt and out_dir/report.tsv.
EvalReport run_evaluate(const PipelineConfig& cfg, const fs::path& scores,
                        const fs::path& trials, const fs::path& out_dir);

struct FullRunResult {
  EvalReport cosine;
  EvalReport plda;
  fs::path cosine_scores;
  fs::path plda_scores;
};

/// Every stage in order on a fresh synthetic corpus under work_dir.
FullRunResult run_full_pipeline(const PipelineConfig& cfg, const fs::path& work_dir,
                                int jobs);

}  // namespace ctsforge

#endif  // CTSFORGE_PIPELINE_H_
