// tests/metrics_test.cc

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
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.h"
#include "test_util.h"

namespace ctsforge {
namespace {

const std::vector<double> kTar = {0.9, 0.8, 0.3};
const std::vector<double> kNon = {0.7, 0.2, 0.1};

CostParams prior_half() {
  CostParams p;
  p.p_targets = {0.5};
  return p;
}

/// Key and scores for the given target / nontarget lists, ids t0.., n0...
std::pair<ScoreSet, TrialKey> as_trials(const std::vector<double>& tar,
                                        const std::vector<double>& non) {
  ScoreSet s;
  TrialKey k;
  for (std::size_t i = 0; i < tar.size(); ++i) {
    k.trials.push_back({"e", "t" + std::to_string(i), true});
    s.scores[{"e", "t" + std::to_string(i)}] = tar[i];
  }
  for (std::size_t i = 0; i < non.size(); ++i) {
    k.trials.push_back({"e", "n" + std::to_string(i), false});
    s.scores[{"e", "n" + std::to_string(i)}] = non[i];
  }
  return {s, k};
}

const DetPoint* at(const DetCurve& c, double th) {
  for (const auto& p : c.points)
    if (p.threshold == th) return &p;
  return nullptr;
}

// ---------------------------------------------------------------------------
// DET

TEST(Det, SingleEach) {
  DetCurve c = compute_det(std::vector<double>{1.0}, std::vector<double>{0.0});
  ASSERT_EQ(c.points.size(), 4u);
  const DetPoint* p = at(c, 1.0);
  ASSERT_NE(p, nullptr);
  EXPECT_EQ(p->p_miss, 0.0);
  EXPECT_EQ(p->p_fa, 0.0);
  EXPECT_EQ(c.points.front().p_miss, 0.0);
  EXPECT_EQ(c.points.front().p_fa, 1.0);
  EXPECT_EQ(c.points.back().p_miss, 1.0);
  EXPECT_EQ(c.points.back().p_fa, 0.0);
}

TEST(Det, TiedScoresAreAccepted) {
  DetCurve c = compute_det(std::vector<double>{0.4, 0.4}, std::vector<double>{0.4});
  ASSERT_EQ(c.points.size(), 3u);
  EXPECT_EQ(c.points[1].threshold, 0.4);
  EXPECT_EQ(c.points[1].p_miss, 0.0);
  EXPECT_EQ(c.points[1].p_fa, 1.0);
}

TEST(Det, ThreeByThree) {
  // Operating points between scores follow the next distinct score up.
  DetCurve c = compute_det(kTar, kNon);
  const DetPoint* p = at(c, 0.8);  // same decisions as 0.75
  ASSERT_NE(p, nullptr);
  EXPECT_DOUBLE_EQ(p->p_miss, 1.0 / 3);
  EXPECT_DOUBLE_EQ(p->p_fa, 0.0);
  p = at(c, 0.7);  // same decisions as 0.5
  ASSERT_NE(p, nullptr);
  EXPECT_DOUBLE_EQ(p->p_miss, 1.0 / 3);
  EXPECT_DOUBLE_EQ(p->p_fa, 1.0 / 3);
}

TEST(Det, MatchesSweepAndIsMonotone) {
  std::mt19937 gen(5);
  std::uniform_int_distribution<int> coarse(0, 20);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> tar(1 + rep % 7), non(2 + rep % 11);
    for (auto& s : tar) s = coarse(gen) * 0.1;  // plenty of ties
    for (auto& s : non) s = coarse(gen) * 0.1 - 0.5;
    DetCurve c = compute_det(tar, non);
    auto ref = oracle::sweep(tar, non);
    ASSERT_EQ(c.points.size(), ref.size());
    for (std::size_t k = 0; k < ref.size(); ++k) {
      EXPECT_DOUBLE_EQ(c.points[k].p_miss, ref[k].p_miss);
      EXPECT_DOUBLE_EQ(c.points[k].p_fa, ref[k].p_fa);
      if (k > 0) {
        EXPECT_GT(c.points[k].threshold, c.points[k - 1].threshold);
        EXPECT_GE(c.points[k].p_miss, c.points[k - 1].p_miss);
        EXPECT_LE(c.points[k].p_fa, c.points[k - 1].p_fa);
      }
    }
  }
}

TEST(Det, Errors) {
  const std::vector<double> none;
  EXPECT_THROW(compute_det(none, kNon), std::invalid_argument);
  EXPECT_THROW(compute_det(kTar, none), std::invalid_argument);
  EXPECT_THROW(compute_det(std::vector<double>{NAN}, kNon), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// EER and min_C

TEST(Eer, Examples) {
  EXPECT_NEAR(eer(compute_det(kTar, kNon)), 1.0 / 3, 1e-12);
  EXPECT_EQ(eer(compute_det(std::vector<double>{2, 3}, std::vector<double>{0, 1})), 0.0);
  // Reversed system: every target below every nontarget.
  EXPECT_EQ(eer(compute_det(std::vector<double>{0, 1}, std::vector<double>{2, 3})), 1.0);
}

TEST(Eer, SameDistributionIsHalf) {
  std::mt19937 gen(6);
  std::normal_distribution<double> nd;
  std::vector<double> tar(100000), non(100000);
  for (auto& s : tar) s = nd(gen);
  for (auto& s : non) s = nd(gen);
  EXPECT_NEAR(eer(compute_det(tar, non)), 0.5, 0.01);
}

TEST(Eer, MatchesSweepOracle) {
  std::mt19937 gen(7);
  std::normal_distribution<double> nd;
  std::uniform_int_distribution<int> coarse(0, 12);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> tar(1 + rep % 13), non(1 + rep % 17);
    const bool ties = rep % 2 == 0;
    for (auto& s : tar) s = ties ? coarse(gen) * 0.25 + 0.5 : nd(gen) + 1.0;
    for (auto& s : non) s = ties ? coarse(gen) * 0.25 : nd(gen);
    const double e = eer(compute_det(tar, non));
    EXPECT_GE(e, 0.0);
    EXPECT_LE(e, 1.0);
    EXPECT_NEAR(e, oracle::eer(tar, non), 1e-12) << "rep " << rep;
  }
}

TEST(MinCost, Examples) {
  EXPECT_NEAR(min_cost(compute_det(kTar, kNon), prior_half()), 1.0 / 3, 1e-12);
  EXPECT_EQ(min_cost(compute_det(std::vector<double>{5}, std::vector<double>{-5})), 0.0);
  CostParams odd;
  odd.p_targets = {0.2, 0.9};
  odd.c_miss = 3.0;
  EXPECT_EQ(min_cost(compute_det(std::vector<double>{1, 2}, std::vector<double>{0}), odd),
            0.0);
  std::vector<double> flat(10, 0.5);
  EXPECT_NEAR(min_cost(compute_det(flat, flat)), 1.0, 1e-12);
  EXPECT_NEAR(min_cost(compute_det(flat, flat), odd), 1.0, 1e-12);
}

TEST(MinCost, BoundedAndMatchesOracle) {
  std::mt19937 gen(8);
  std::normal_distribution<double> nd;
  CostParams params;  // default priors
  CostParams odd;
  odd.p_targets = {0.3, 0.05};
  odd.c_miss = 10.0;
  odd.c_fa = 0.5;
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> tar(5 + rep % 9), non(20 + rep % 31);
    for (auto& s : tar) s = nd(gen) + (rep % 3);
    for (auto& s : non) s = nd(gen);
    DetCurve c = compute_det(tar, non);
    for (const CostParams* p : {&params, &odd}) {
      const double m = min_cost(c, *p);
      EXPECT_LE(m, 1.0 + 1e-12);
      EXPECT_NEAR(m, oracle::min_cost(tar, non, p->p_targets, p->c_miss, p->c_fa), 1e-12);
    }
  }
}

TEST(MinCost, BadParams) {
  DetCurve c = compute_det(kTar, kNon);
  CostParams p;
  p.p_targets = {};
  EXPECT_THROW(min_cost(c, p), std::invalid_argument);
  p.p_targets = {1.0};
  EXPECT_THROW(min_cost(c, p), std::invalid_argument);
  p.p_targets = {0.5};
  p.c_fa = 0.0;
  EXPECT_THROW(min_cost(c, p), std::invalid_argument);
}

TEST(Metrics, MonotoneTransformInvariance) {
  std::mt19937 gen(9);
  std::normal_distribution<double> nd;
  std::vector<double> tar(300), non(2000);
  for (auto& s : tar) s = nd(gen) + 1.5;
  for (auto& s : non) s = nd(gen);
  const double e = eer(compute_det(tar, non));
  const double m = min_cost(compute_det(tar, non));
  auto transformed = [](std::vector<double> v, auto f) {
    for (auto& s : v) s = f(s);
    return v;
  };
  auto check = [&](auto f) {
    DetCurve c = compute_det(transformed(tar, f), transformed(non, f));
    EXPECT_EQ(eer(c), e);
    EXPECT_EQ(min_cost(c), m);
  };
  check([](double s) { return 3.0 * s - 7.0; });
  check([](double s) { return std::exp(s); });
  check([](double s) { return std::atan(s); });
  check([](double s) { return s * s * s; });
}

// ---------------------------------------------------------------------------
// evaluate and rendering

TEST(Evaluate, ThreeByThreeReport) {
  auto [scores, key] = as_trials(kTar, kNon);
  EvalReport r = evaluate(scores, key, prior_half());
  EXPECT_EQ(r.targets, 3u);
  EXPECT_EQ(r.nontargets, 3u);
  std::string table = r.render_table();
  EXPECT_NE(table.find("EER [%]"), std::string::npos);
  EXPECT_NE(table.find("min_C"), std::string::npos);
  EXPECT_NE(table.find("33.33"), std::string::npos) << table;
  EXPECT_NE(table.find("0.333"), std::string::npos) << table;
  EXPECT_EQ(r.render_tsv(), "eer_percent\tmin_c\ttargets\tnontargets\n33.33\t0.333\t3\t3\n");
}

TEST(Evaluate, PerfectSystem) {
  auto [scores, key] = as_trials({3, 4, 5}, {0, 1});
  std::string table = evaluate(scores, key).render_table();
  EXPECT_NE(table.find("0.00"), std::string::npos);
  EXPECT_NE(table.find("0.000"), std::string::npos);
  EXPECT_EQ(table.find("33"), std::string::npos);
}

TEST(Evaluate, RendersTwoAndThreeDecimals) {
  EvalReport r;
  r.eer = 0.0437;
  r.min_c = 0.19;
  r.targets = 12;
  r.nontargets = 3456;
  EXPECT_EQ(r.render_table(),
            "  EER [%]    min_C   #target  #nontarget\n"
            "     4.37    0.190        12        3456\n");
}

TEST(Evaluate, IndependentOfTrialOrder) {
  std::mt19937 gen(10);
  std::normal_distribution<double> nd;
  std::vector<double> tar(50), non(400);
  for (auto& s : tar) s = nd(gen) + 1.0;
  for (auto& s : non) s = nd(gen);
  auto [scores, key] = as_trials(tar, non);
  const std::string ref = evaluate(scores, key).render_tsv();
  for (int rep = 0; rep < 5; ++rep) {
    std::shuffle(key.trials.begin(), key.trials.end(), gen);
    EXPECT_EQ(evaluate(scores, key).render_tsv(), ref);
  }
}

TEST(Evaluate, ListsMissingScores) {
  auto [scores, key] = as_trials(kTar, kNon);
  scores.scores.erase({"e", "t1"});
  scores.scores.erase({"e", "n2"});
  try {
    evaluate(scores, key);
    FAIL() << "expected MissingScoresError";
  } catch (const MissingScoresError& e) {
    ASSERT_EQ(e.missing().size(), 2u);
    EXPECT_EQ(e.missing()[0], TrialId("e", "t1"));
    EXPECT_EQ(e.missing()[1], TrialId("e", "n2"));
    EXPECT_NE(std::string(e.what()).find("e\tt1"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("e\tn2"), std::string::npos);
  }
}

TEST(Evaluate, DuplicateTrialRejected) {
  auto [scores, key] = as_trials(kTar, kNon);
  key.trials.push_back(key.trials.front());
  EXPECT_THROW(key.check(), std::invalid_argument);
  EXPECT_THROW(evaluate(scores, key), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Files

TEST(MetricsFiles, TrialKeyRoundTrip) {
  testing::TempDir dir("metrics");
  TrialKey key;
  key.trials = {{"a-001", "b-002", true}, {"a-001", "c-003", false}};
  write_trial_key(dir / "trials", key);
  EXPECT_EQ(testing::slurp(dir / "trials"),
            "a-001\tb-002\ttarget\na-001\tc-003\tnontarget\n");
  TrialKey back = read_trial_key(dir / "trials");
  ASSERT_EQ(back.trials.size(), 2u);
  EXPECT_EQ(back.trials[1].test, "c-003");
  EXPECT_FALSE(back.trials[1].target);

  std::ofstream(dir / "bad") << "a\tb\tmaybe\n";
  EXPECT_THROW(read_trial_key(dir / "bad"), std::runtime_error);
  std::ofstream(dir / "short") << "a\tb\n";
  EXPECT_THROW(read_trial_key(dir / "short"), std::runtime_error);
}

TEST(MetricsFiles, ScoresAtSixDecimals) {
  testing::TempDir dir("metrics");
  write_scores(dir / "scores", {{{"a", "b"}, 1.0 / 3}, {{"a", "c"}, -2.5}});
  EXPECT_EQ(testing::slurp(dir / "scores"), "a\tb\t0.333333\na\tc\t-2.500000\n");
  ScoreSet s = read_scores(dir / "scores");
  ASSERT_EQ(s.scores.size(), 2u);
  EXPECT_EQ(s.scores.at({"a", "b"}), 0.333333);
  EXPECT_EQ(s.scores.at({"a", "c"}), -2.5);
  std::ofstream(dir / "bad") << "a\tb\tx\n";
  EXPECT_THROW(read_scores(dir / "bad"), std::runtime_error);
}

}  // namespace
}  // namespace ctsforge
