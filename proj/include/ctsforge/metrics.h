// ctsforge/metrics.h

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

// Trial evaluation: DET operating points, EER and minimum normalized
// detection cost.
//
// Decision rule: a trial is accepted when score >= threshold. So at
// threshold t, p_miss = #(target scores < t) / #targets and
// p_fa = #(nontarget scores >= t) / #nontargets.

#ifndef CTSFORGE_METRICS_H_
#define CTSFORGE_METRICS_H_

#include <filesystem>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ctsforge {

struct Trial {
  std::string enroll;
  std::string test;
  bool target = false;
};

struct TrialKey {
  std::vector<Trial> trials;
  /// Throws if an (enroll, test) pair repeats.
  void check() const;
};

using TrialId = std::pair<std::string, std::string>;

struct ScoreSet {
  std::map<TrialId, double> scores;
};

class MissingScoresError : public std::runtime_error {
 public:
  explicit MissingScoresError(std::vector<TrialId> missing);
  const std::vector<TrialId>& missing() const { return missing_; }

 private:
  std::vector<TrialId> missing_;
};

struct DetPoint {
  double threshold;
  double p_miss;
  double p_fa;
};

/// Ordered by increasing threshold: -inf, each distinct score, +inf.
struct DetCurve {
  std::vector<DetPoint> points;
};

struct CostParams {
  std::vector<double> p_targets = {0.01, 0.005};
  double c_miss = 1.0;
  double c_fa = 1.0;
  void check() const;
};

DetCurve compute_det(std::span<const double> target_scores,
                     std::span<const double> nontarget_scores);
/// Throws MissingScoresError listing every keyed trial without a score.
DetCurve compute_det(const ScoreSet& scores, const TrialKey& key);

/// Linear interpolation between the two adjacent points where
/// p_miss - p_fa changes sign.
double eer(const DetCurve& curve);

/// Mean over priors p of min over thresholds of
/// (c_miss p p_miss + c_fa (1-p) p_fa) / min(c_miss p, c_fa (1-p)).
double min_cost(const DetCurve& curve, const CostParams& params = {});
double min_cost(const ScoreSet& scores, const TrialKey& key,
                const CostParams& params = {});

struct EvalReport {
  double eer = 0.0;  // fraction
  double min_c = 0.0;
  std::size_t targets = 0;
  std::size_t nontargets = 0;

  /// Aligned table; EER in percent with 2 decimals, min_C with 3.
  std::string render_table() const;
  std::string render_tsv() const;
};

EvalReport evaluate(const ScoreSet& scores, const TrialKey& key,
                    const CostParams& params = {});

/// TSV "enrollid<TAB>testid<TAB>target|nontarget".
TrialKey read_trial_key(const std::filesystem::path& path);
void write_trial_key(const std::filesystem::path& path, const TrialKey& key);

/// TSV "enroll_segmentid<TAB>test_segmentid<TAB>score", 6 decimals.
ScoreSet read_scores(const std::filesystem::path& path);
void write_scores(const std::filesystem::path& path,
                  const std::vector<std::pair<TrialId, double>>& scores);

}  // namespace ctsforge

#endif  // CTSFORGE_METRICS_H_
