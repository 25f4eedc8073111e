// ctsforge.cc

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

// ctsforge <subcommand> [--config cfg.ini] [--jobs N] [--seed S] [stage flags]
//
// Exit status: 0 success, 1 stage failure, 2 usage or config error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ctsforge/pipeline.h"

using namespace ctsforge;

namespace {

struct Options {
  std::string config;
  int jobs = 1;
  std::optional<std::uint64_t> seed;

  std::string out, sessions, metadata, manifest, noise, model, embeddings, trials,
      scores, backend_dir, kind = "cosine", table;
  std::vector<std::string> features;
};

Manifest input_manifest(const Options& o) {
  if (!o.metadata.empty() == !o.manifest.empty())
    throw CLI::ValidationError("exactly one of --metadata and --manifest is required");
  return o.metadata.empty() ? read_manifest(o.manifest) : manifest_from_metadata(o.metadata);
}

PipelineConfig resolve_config(const std::string& stage, const Options& o) {
  PipelineConfig cfg = o.config.empty() ? PipelineConfig{} : load_config(o.config);
  if (o.seed) {
    if (stage == "synth") cfg.synth.seed = *o.seed;
    if (stage == "segment") cfg.corpus.seed = *o.seed;
    if (stage == "augment") cfg.augment.seed = *o.seed;
    if (stage == "train") cfg.train.seed = *o.seed;
  }
  cfg.check();
  return cfg;
}

int run(const std::string& stage, const Options& o) {
  const PipelineConfig cfg = resolve_config(stage, o);
  if (stage == "dump-config") {
    if (o.out.empty())
      std::cout << serialize_config(cfg);
    else
      std::ofstream(o.out) << serialize_config(cfg);
  } else if (stage == "synth") {
    if (!o.table.empty()) {
      write_metadata(fs::path(o.table), make_superset_shaped_records(),
                     {"synthetic metadata shaped like the CTS Superset counts; not real data"});
      std::cout << "wrote " << o.table << '\n';
    }
    if (!o.out.empty()) {
      auto outs = run_synth(cfg, o.out, o.jobs);
      std::cout << "train sessions: " << outs.train_sessions.string() << '\n'
                << "eval sessions: " << outs.eval_sessions.string() << '\n'
                << "noise manifest: " << outs.noise_manifest.string() << '\n';
    }
  } else if (stage == "segment") {
    auto records = run_segment(cfg, o.sessions, o.out, o.jobs);
    std::cout << records.size() << " segments\n";
  } else if (stage == "featurize") {
    auto m = run_featurize(cfg, input_manifest(o), o.out, o.jobs);
    std::cout << m.size() << " feature files\n";
  } else if (stage == "augment") {
    auto m = run_augment(cfg, input_manifest(o), o.noise, o.out, o.jobs);
    std::cout << m.size() << " augmented copies\n";
  } else if (stage == "train") {
    Manifest all;
    for (const auto& f : o.features) {
      auto m = read_manifest(f);
      all.insert(all.end(), m.begin(), m.end());
    }
    auto log = run_train(cfg, all, o.out);
    if (!log.empty())
      std::cout << "final loss " << log.back().loss << ", accuracy " << log.back().accuracy
                << '\n';
  } else if (stage == "extract") {
    if (o.features.size() != 1)
      throw CLI::ValidationError("extract takes exactly one --features manifest");
    auto a = run_extract(cfg, o.model, read_manifest(o.features.front()), o.out, o.jobs);
    std::cout << a.ids.size() << " embeddings\n";
  } else if (stage == "train-backend") {
    run_train_backend(cfg, o.embeddings, input_manifest(o), o.out);
  } else if (stage == "trials") {
    auto key = make_all_pairs_key(input_manifest(o));
    write_trial_key(o.out, key);
    std::cout << key.trials.size() << " trials\n";
  } else if (stage == "score") {
    auto s = run_score(cfg, o.backend_dir, o.embeddings, o.trials,
                       parse_score_backend(o.kind), o.out);
    std::cout << s.size() << " scores\n";
  } else if (stage == "evaluate") {
    std::cout << run_evaluate(cfg, o.scores, o.trials, o.out).render_table();
  } else if (stage == "validate") {
    auto report = validate_superset(parse_metadata(fs::path(o.metadata)));
    std::cout << report.render();
    if (!report.empty()) {
      std::cerr << report.violations.size() << " violations\n";
      return 1;
    }
    std::cout << "OK\n";
  } else if (stage == "stats") {
    std::cout << render_stats(compute_stats(parse_metadata(fs::path(o.metadata))));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ctsforge: telephone speaker recognition pipeline"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config, "INI configuration file")->check(CLI::ExistingFile);
  app.add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", o.seed, "override the seed of the stage being run");

  auto sub = [&](const char* name, const char* help) {
    auto* s = app.add_subcommand(name, help);
    s->fallthrough();
    return s;
  };
  auto req = [](CLI::App* s, const char* flag, std::string& dest, const char* help) {
    s->add_option(flag, dest, help)->required();
  };

  auto* dump = sub("dump-config", "print the resolved configuration");
  dump->add_option("--out", o.out, "write to this file instead of stdout");

  auto* synth = sub("synth", "write a synthetic corpus (not real speech)");
  synth->add_option("--out", o.out, "output directory");
  synth->add_option("--table", o.table,
                    "also write metadata shaped like the Superset per-corpus counts");

  auto* segment = sub("segment", "SAD and segment cutting");
  req(segment, "--sessions", o.sessions, "session list");
  req(segment, "--out", o.out, "output directory");

  for (auto* s : {sub("featurize", "log-mel front end"),
                  sub("augment", "noise-degraded copies")}) {
    s->add_option("--metadata", o.metadata, "segment metadata TSV");
    s->add_option("--manifest", o.manifest, "audio manifest TSV");
    req(s, "--out", o.out, "output directory");
    if (s->get_name() == "augment") req(s, "--noise", o.noise, "noise manifest");
  }

  auto* train = sub("train", "train the embedding extractor");
  train->add_option("--features", o.features, "feature manifests")->required();
  req(train, "--out", o.out, "output directory");

  auto* extract = sub("extract", "embed segments");
  req(extract, "--model", o.model, "model file");
  extract->add_option("--features", o.features, "feature manifest")->required();
  req(extract, "--out", o.out, "embedding archive (.fmat)");

  auto* backend = sub("train-backend", "fit whitening, LDA and PLDA");
  req(backend, "--embeddings", o.embeddings, "training embedding archive");
  backend->add_option("--metadata", o.metadata, "speaker labels from segment metadata");
  backend->add_option("--manifest", o.manifest, "speaker labels from a manifest");
  req(backend, "--out", o.out, "output directory");

  auto* trials = sub("trials", "all-pairs trial key over a segment list");
  trials->add_option("--metadata", o.metadata, "segment metadata TSV");
  trials->add_option("--manifest", o.manifest, "segment manifest TSV");
  req(trials, "--out", o.out, "trial key TSV");

  auto* score = sub("score", "score trials");
  req(score, "--backend-dir", o.backend_dir, "train-backend output directory");
  req(score, "--embeddings", o.embeddings, "embedding archive");
  req(score, "--trials", o.trials, "trial key TSV");
  score->add_option("--backend", o.kind, "cosine | plda")
      ->check(CLI::IsMember({"cosine", "plda"}));
  req(score, "--out", o.out, "score TSV");

  auto* evaluate = sub("evaluate", "EER and min_C");
  req(evaluate, "--scores", o.scores, "score TSV");
  req(evaluate, "--trials", o.trials, "trial key TSV");
  req(evaluate, "--out", o.out, "report directory");

  auto* validate = sub("validate", "check Superset metadata invariants");
  req(validate, "--metadata", o.metadata, "metadata TSV");
  auto* stats = sub("stats", "per-corpus counts");
  req(stats, "--metadata", o.metadata, "metadata TSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const std::string stage = app.get_subcommands().front()->get_name();
  try {
    return run(stage, o);
  } catch (const ConfigError& e) {
    std::cerr << "ctsforge: " << e.what() << '\n';
    return 2;
  } catch (const CLI::Error& e) {
    std::cerr << "ctsforge " << stage << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "ctsforge " << stage << ": " << e.what() << '\n';
    return 1;
  }
}
