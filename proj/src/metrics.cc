// metrics.cc

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

#include "ctsforge/metrics.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include "ctsforge/text.h"

namespace ctsforge {

void TrialKey::check() const {
  std::set<TrialId> seen;
  for (const auto& t : trials)
    if (!seen.emplace(t.enroll, t.test).second)
      throw std::invalid_argument("duplicate trial " + t.enroll + " / " + t.test);
}

namespace {

std::string missing_message(const std::vector<TrialId>& missing) {
  std::string msg = std::to_string(missing.size()) + " keyed trials have no score:";
  for (const auto& [e, t] : missing) msg += "\n  " + e + "\t" + t;
  return msg;
}

}  // namespace

MissingScoresError::MissingScoresError(std::vector<TrialId> missing)
    : std::runtime_error(missing_message(missing)), missing_(std::move(missing)) {}

void CostParams::check() const {
  if (p_targets.empty()) throw std::invalid_argument("cost: no target priors");
  for (double p : p_targets)
    if (!(p > 0.0 && p < 1.0))
      throw std::invalid_argument("cost: target prior must be in (0, 1)");
  if (!(c_miss > 0.0 && c_fa > 0.0))
    throw std::invalid_argument("cost: costs must be positive");
}

DetCurve compute_det(std::span<const double> target_scores,
                     std::span<const double> nontarget_scores) {
  if (target_scores.empty()) throw std::invalid_argument("det: no target trials");
  if (nontarget_scores.empty()) throw std::invalid_argument("det: no nontarget trials");
  std::vector<double> tar(target_scores.begin(), target_scores.end());
  std::vector<double> non(nontarget_scores.begin(), nontarget_scores.end());
  for (double s : tar)
    if (!std::isfinite(s)) throw std::invalid_argument("det: non-finite score");
  for (double s : non)
    if (!std::isfinite(s)) throw std::invalid_argument("det: non-finite score");
  std::sort(tar.begin(), tar.end());
  std::sort(non.begin(), non.end());
  std::vector<double> thresholds;
  thresholds.reserve(tar.size() + non.size());
  std::merge(tar.begin(), tar.end(), non.begin(), non.end(),
             std::back_inserter(thresholds));
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  const auto nt = static_cast<double>(tar.size());
  const auto nn = static_cast<double>(non.size());
  const double inf = std::numeric_limits<double>::infinity();
  DetCurve curve;
  curve.points.reserve(thresholds.size() + 2);
  curve.points.push_back({-inf, 0.0, 1.0});
  std::size_t below_t = 0, below_n = 0;  // scores strictly below the threshold
  for (double th : thresholds) {
    while (below_t < tar.size() && tar[below_t] < th) ++below_t;
    while (below_n < non.size() && non[below_n] < th) ++below_n;
    curve.points.push_back({th, static_cast<double>(below_t) / nt,
                            static_cast<double>(non.size() - below_n) / nn});
  }
  curve.points.push_back({inf, 1.0, 0.0});
  return curve;
}

DetCurve compute_det(const ScoreSet& scores, const TrialKey& key) {
  std::vector<double> tar, non;
  std::vector<TrialId> missing;
  for (const auto& t : key.trials) {
    auto it = scores.scores.find({t.enroll, t.test});
    if (it == scores.scores.end()) {
      missing.emplace_back(t.enroll, t.test);
      continue;
    }
    (t.target ? tar : non).push_back(it->second);
  }
  if (!missing.empty()) throw MissingScoresError(std::move(missing));
  return compute_det(tar, non);
}

double eer(const DetCurve& curve) {
  const auto& pts = curve.points;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const double diff = pts[k].p_miss - pts[k].p_fa;
    if (diff < 0.0) continue;
    if (diff == 0.0 || k == 0) return pts[k].p_miss;
    const double prev = pts[k - 1].p_miss - pts[k - 1].p_fa;
    const double lambda = prev / (prev - diff);
    return (1.0 - lambda) * pts[k - 1].p_miss + lambda * pts[k].p_miss;
  }
  return pts.empty() ? 0.0 : pts.back().p_miss;
}

double min_cost(const DetCurve& curve, const CostParams& params) {
  params.check();
  double total = 0.0;
  for (double p : params.p_targets) {
    const double norm = std::min(params.c_miss * p, params.c_fa * (1.0 - p));
    double best = std::numeric_limits<double>::infinity();
    for (const auto& pt : curve.points)
      best = std::min(best, (params.c_miss * p * pt.p_miss +
                             params.c_fa * (1.0 - p) * pt.p_fa) / norm);
    total += best;
  }
  return total / static_cast<double>(params.p_targets.size());
}

double min_cost(const ScoreSet& scores, const TrialKey& key, const CostParams& params) {
  return min_cost(compute_det(scores, key), params);
}

std::string EvalReport::render_table() const {
  std::ostringstream os;
  os << std::right << std::setw(9) << "EER [%]" << std::setw(9) << "min_C"
     << std::setw(10) << "#target" << std::setw(12) << "#nontarget" << '\n'
     << std::setw(9) << format_fixed(100.0 * eer, 2) << std::setw(9)
     << format_fixed(min_c, 3) << std::setw(10) << targets << std::setw(12)
     << nontargets << '\n';
  return os.str();
}

std::string EvalReport::render_tsv() const {
  return "eer_percent\tmin_c\ttargets\tnontargets\n" + format_fixed(100.0 * eer, 2) +
         "\t" + format_fixed(min_c, 3) + "\t" + std::to_string(targets) + "\t" +
         std::to_string(nontargets) + "\n";
}

EvalReport evaluate(const ScoreSet& scores, const TrialKey& key,
                    const CostParams& params) {
  key.check();
  DetCurve curve = compute_det(scores, key);
  EvalReport r;
  r.eer = eer(curve);
  r.min_c = min_cost(curve, params);
  for (const auto& t : key.trials) ++(t.target ? r.targets : r.nontargets);
  return r;
}

namespace {

template <typename RowFn>
void read_tsv(const std::filesystem::path& path, std::size_t columns, RowFn&& fn) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto cols = split_tabs(line);
    if (cols.size() != columns)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": expected " + std::to_string(columns) + " columns");
    fn(cols, lineno);
  }
}

}  // namespace

TrialKey read_trial_key(const std::filesystem::path& path) {
  TrialKey key;
  read_tsv(path, 3, [&](const auto& cols, std::size_t lineno) {
    bool target;
    if (cols[2] == "target")
      target = true;
    else if (cols[2] == "nontarget")
      target = false;
    else
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": label must be target or nontarget");
    key.trials.push_back({std::string(cols[0]), std::string(cols[1]), target});
  });
  key.check();
  return key;
}

void write_trial_key(const std::filesystem::path& path, const TrialKey& key) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& t : key.trials)
    out << t.enroll << '\t' << t.test << '\t' << (t.target ? "target" : "nontarget")
        << '\n';
}

ScoreSet read_scores(const std::filesystem::path& path) {
  ScoreSet set;
  read_tsv(path, 3, [&](const auto& cols, std::size_t lineno) {
    double s;
    if (!parse_number(cols[2], s) || !std::isfinite(s))
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": bad score");
    if (!set.scores.emplace(TrialId{cols[0], cols[1]}, s).second)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": duplicate trial");
  });
  return set;
}

void write_scores(const std::filesystem::path& path,
                  const std::vector<std::pair<TrialId, double>>& scores) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& [id, s] : scores)
    out << id.first << '\t' << id.second << '\t' << format_fixed(s, 6) << '\n';
}

}  // namespace ctsforge
