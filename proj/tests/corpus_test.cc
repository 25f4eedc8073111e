// tests/corpus_test.cc

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

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "ctsforge/corpus.h"
#include "ctsforge/synth.h"
#include "test_util.h"

namespace ctsforge {
namespace {

const char* kHeader =
    "filename\tsegmentid\tsubjectid\tspeakerid\tspeech_duration\tsessionid\t"
    "corpusid\tphoneid\tgender\tlanguage\n";

std::string row(const std::string& seg, const std::string& subj, int spk,
                const std::string& dur, const std::string& sess,
                const std::string& corpus = "mx6", const std::string& gender = "male") {
  return "wav/" + seg + ".wav\t" + seg + "\t" + subj + "\t" + std::to_string(spk) +
         "\t" + dur + "\t" + sess + "\t" + corpus + "\tph1\t" + gender + "\teng\n";
}

SegmentRecord record(const std::string& seg, const std::string& subj,
                     std::int64_t spk, const std::string& sess,
                     const std::string& corpus = "mx6", Gender g = Gender::kMale) {
  SegmentRecord r;
  r.filename = "wav/" + seg + ".wav";
  r.segmentid = seg;
  r.subjectid = subj;
  r.speakerid = spk;
  r.speech_duration = 20.0;
  r.sessionid = sess;
  r.corpusid = corpus;
  r.phoneid = "ph";
  r.gender = g;
  r.language = "eng";
  return r;
}

std::vector<SegmentRecord> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_metadata(in);
}

std::size_t error_line(const std::string& text, std::string* what = nullptr) {
  try {
    parse(text);
  } catch (const MetadataError& e) {
    if (what) *what = e.what();
    return e.line();
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Metadata parsing

TEST(ParseMetadata, HeaderOnlyGivesNoRecords) {
  EXPECT_TRUE(parse(kHeader).empty());
}

TEST(ParseMetadata, DurationAboveRangeReportsLine) {
  std::string what;
  std::string text = std::string(kHeader) + row("a", "s1", 0, "20.00", "x") +
                     row("b", "s1", 0, "61.2", "y");
  EXPECT_EQ(error_line(text, &what), 3u);
  EXPECT_NE(what.find("duration out of range"), std::string::npos) << what;
}

TEST(ParseMetadata, DurationBoundsAreInclusive) {
  auto recs = parse(std::string(kHeader) + row("a", "s1", 0, "10.00", "x") +
                    row("b", "s1", 0, "60.00", "y"));
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].speech_duration, 10.0);
  EXPECT_EQ(recs[1].speech_duration, 60.0);
  EXPECT_EQ(error_line(std::string(kHeader) + row("a", "s1", 0, "9.99", "x")), 2u);
}

TEST(ParseMetadata, ThreeRowsTwoSubjectsRenumberDensely) {
  // Raw ids deliberately sparse; renumbering follows first appearance.
  auto recs = parse(std::string(kHeader) + row("a", "spkB", 7, "12.5", "x") +
                    row("b", "spkA", 3, "30", "y") + row("c", "spkB", 7, "40", "z"));
  assign_speaker_ids(recs);
  std::map<std::string, std::int64_t> expected = {{"spkB", 0}, {"spkA", 1}};
  std::set<std::int64_t> ids;
  for (const auto& r : recs) {
    EXPECT_EQ(r.speakerid, expected.at(r.subjectid));
    ids.insert(r.speakerid);
  }
  EXPECT_EQ(ids, (std::set<std::int64_t>{0, 1}));
}

TEST(ParseMetadata, RejectsMalformedRows) {
  std::string what;
  EXPECT_EQ(error_line(std::string(kHeader) + "a\tb\tc\n", &what), 2u);
  EXPECT_NE(what.find("malformed"), std::string::npos);
  EXPECT_EQ(error_line(std::string(kHeader) + row("a", "s", 0, "20", "x", "mx7"), &what),
            2u);
  EXPECT_NE(what.find("corpusid"), std::string::npos);
  EXPECT_EQ(error_line(std::string(kHeader) + row("a", "s", 0, "20", "x", "mx6", "m"),
                       &what),
            2u);
  EXPECT_NE(what.find("gender"), std::string::npos);
  EXPECT_EQ(error_line("segmentid\tfilename\n"), 1u);
  EXPECT_EQ(error_line(std::string(kHeader) + row("a", "s", 0, "abc", "x")), 2u);
}

TEST(ParseMetadata, CommentLinesDoNotShiftLineNumbers) {
  std::string text = "# seed 5\n" + std::string(kHeader) + "# note\n" +
                     row("a", "s", 0, "70", "x");
  EXPECT_EQ(error_line(text), 4u);
}

TEST(ParseMetadata, RoundTripIsIdentity) {
  std::mt19937 gen(4);
  std::uniform_real_distribution<double> dur(10.0, 60.0);
  std::vector<SegmentRecord> recs;
  for (int i = 0; i < 200; ++i) {
    auto r = record("seg" + std::to_string(i), "subj" + std::to_string(i % 17), 0,
                    "sess" + std::to_string(i % 41),
                    std::string(kCorpusIds[static_cast<std::size_t>(i) % 10]),
                    i % 3 ? Gender::kMale : Gender::kFemale);
    // Two decimals survive the text format exactly.
    r.speech_duration = std::round(dur(gen) * 100.0) / 100.0;
    recs.push_back(r);
  }
  assign_speaker_ids(recs);
  std::ostringstream out;
  write_metadata(out, recs, {"seed 9"});
  auto back = parse(out.str());
  EXPECT_EQ(back, recs);
  std::ostringstream again;
  write_metadata(again, back, {"seed 9"});
  EXPECT_EQ(again.str(), out.str());
}

TEST(ParseMetadata, FileRoundTrip) {
  testing::TempDir dir("corpus");
  std::vector<SegmentRecord> recs = {record("a", "s1", 0, "x"), record("b", "s2", 1, "y")};
  write_metadata(dir / "m.tsv", recs);
  EXPECT_EQ(parse_metadata(dir / "m.tsv"), recs);
  EXPECT_THROW(parse_metadata(dir / "missing.tsv"), std::runtime_error);
}

// ---------------------------------------------------------------------------
// Statistics

TEST(ComputeStats, EmptyInputGivesZeros) {
  auto s = compute_stats({});
  EXPECT_TRUE(s.per_corpus.empty());
  EXPECT_EQ(s.totals, CorpusTotals{});
}

TEST(ComputeStats, SubjectInTwoCorporaCountsOnceInTotals) {
  std::vector<SegmentRecord> recs = {
      record("a", "s1", 0, "x1", "mx3"), record("b", "s1", 0, "x2", "mx45"),
      record("c", "s2", 1, "x3", "mx3"), record("d", "s3", 2, "x4", "mx45", Gender::kFemale)};
  auto s = compute_stats(recs);
  std::size_t summed = 0;
  for (const auto& [id, c] : s.per_corpus) summed += c.speakers;
  EXPECT_EQ(summed, 4u);
  EXPECT_EQ(s.totals.speakers, summed - 1);
  EXPECT_EQ(s.totals.segments, 4u);
  EXPECT_EQ(s.totals.males, 2u);
  EXPECT_EQ(s.totals.females, 1u);
  EXPECT_EQ(s.per_corpus.at("mx3"), (CorpusCounts{2, 2, 2}));
}

TEST(ComputeStats, CountsDistinctSessionsAndSubjects) {
  std::vector<SegmentRecord> recs = {record("a", "s1", 0, "x"), record("b", "s1", 0, "x"),
                                     record("c", "s1", 0, "y")};
  EXPECT_EQ(compute_stats(recs).per_corpus.at("mx6"), (CorpusCounts{3, 1, 2}));
}

TEST(ComputeStats, SupersetShapedFileMatchesPublishedCounts) {
  // Published per-corpus (segments, speakers, sessions), typed in here so the
  // check does not lean on the generator's own table.
  const std::map<std::string, CorpusCounts> published = {
      {"swb1r2", {26282, 442, 4757}},   {"swb2p1", {33746, 566, 7134}},
      {"swb2p2", {41982, 649, 8895}},   {"swb2p3", {22865, 548, 5187}},
      {"swbcellp1", {13496, 216, 2560}}, {"swbcellp2", {20985, 378, 3966}},
      {"mx3", {317950, 3033, 37759}},   {"mx45", {40313, 486, 4997}},
      {"mx6", {70174, 526, 8727}},      {"gb1", {17967, 167, 2188}}};
  auto recs = make_superset_shaped_records();
  auto s = compute_stats(recs);
  EXPECT_EQ(s.per_corpus, published);
  EXPECT_EQ(s.per_corpus.at("gb1"), (CorpusCounts{17967, 167, 2188}));
  EXPECT_EQ(s.totals.segments, 605760u);
  EXPECT_EQ(s.totals.speakers, 6867u);
  EXPECT_EQ(s.totals.males + s.totals.females, 6867u);
  EXPECT_TRUE(validate_superset(recs).empty()) << validate_superset(recs).render();
  auto text = render_stats(s);
  EXPECT_NE(text.find("605760"), std::string::npos);
  EXPECT_NE(text.find("6867"), std::string::npos);
}

// ---------------------------------------------------------------------------
// Segmentation

SessionTimeline timeline(std::vector<Interval> ivs, std::string id = "sess") {
  SessionTimeline t;
  t.sessionid = std::move(id);
  t.speech_intervals = std::move(ivs);
  return t;
}

SessionTimeline random_timeline(std::mt19937& gen, const std::string& id) {
  std::uniform_int_distribution<int> count(1, 60);
  std::uniform_real_distribution<double> len(0.05, 25.0), gap(0.01, 5.0);
  SessionTimeline t;
  t.sessionid = id;
  double pos = gap(gen);
  for (int i = count(gen); i > 0; --i) {
    double l = len(gen);
    t.speech_intervals.push_back({pos, pos + l});
    pos += l + gap(gen);
  }
  return t;
}

/// Speech in the timeline strictly after wall-clock time `after`.
double speech_after(const SessionTimeline& t, double after) {
  double s = 0.0;
  for (const auto& iv : t.speech_intervals)
    s += std::max(0.0, iv.end - std::max(iv.start, after));
  return s;
}

/// Wall-clock time at which `speech` seconds of speech have elapsed.
double wall_time(const SessionTimeline& t, double speech) {
  for (const auto& iv : t.speech_intervals) {
    if (speech <= iv.length()) return iv.start + speech;
    speech -= iv.length();
  }
  return t.speech_intervals.back().end;
}

/// Pieces of the timeline inside [a, b], zero-length pieces dropped.
std::vector<Interval> clip(const SessionTimeline& t, double a, double b) {
  std::vector<Interval> out;
  for (const auto& iv : t.speech_intervals) {
    double s = std::max(a, iv.start), e = std::min(b, iv.end);
    if (e - s > 1e-12) out.push_back({s, e});
  }
  return out;
}

void expect_non_overlapping(const std::vector<Segment>& segs) {
  std::vector<Interval> all;
  for (const auto& s : segs) all.insert(all.end(), s.span.begin(), s.span.end());
  for (std::size_t i = 1; i < all.size(); ++i)
    ASSERT_LE(all[i - 1].end, all[i].start + 1e-12) << "pieces " << i - 1 << "," << i;
}

TEST(ExtractSegments, BelowMinimumGivesNothing) {
  SegmenterConfig cfg;
  cfg.rng_seed = 3;
  EXPECT_TRUE(extract_segments(timeline({{0, 2}, {3, 6}}), cfg).empty());
  EXPECT_TRUE(extract_segments(timeline({}), cfg).empty());
}

TEST(ExtractSegments, ExactlyMinimumGivesOneSegment) {
  SegmenterConfig cfg;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    cfg.rng_seed = seed;
    auto segs = extract_segments(timeline({{1, 5}, {7, 13}}), cfg);
    ASSERT_EQ(segs.size(), 1u);
    EXPECT_NEAR(segs[0].speech_dur, 10.0, 1e-12);
    EXPECT_EQ(segs[0].span, (std::vector<Interval>{{1, 5}, {7, 13}}));
  }
}

TEST(ExtractSegments, LongSessionMatchesIntervalOracle) {
  // 600 s of speech in 40 runs of 15 s separated by 1 s gaps.
  std::vector<Interval> ivs;
  for (int i = 0; i < 40; ++i) ivs.push_back({i * 16.0, i * 16.0 + 15.0});
  auto t = timeline(ivs, "long");
  SegmenterConfig cfg;
  cfg.rng_seed = 42;
  auto segs = extract_segments(t, cfg);
  ASSERT_FALSE(segs.empty());
  expect_non_overlapping(segs);

  // Segments tile the speech clock from zero: segment k covers speech time
  // [c_k, c_k + d_k), i.e. the timeline clipped to the wall times of both ends.
  double clock = 0.0;
  for (const auto& seg : segs) {
    EXPECT_GE(seg.speech_dur, 10.0 - 1e-9);
    EXPECT_LE(seg.speech_dur, 60.0 + 1e-9);
    auto expected = clip(t, wall_time(t, clock), wall_time(t, clock + seg.speech_dur));
    ASSERT_EQ(seg.span.size(), expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
      EXPECT_NEAR(seg.span[i].start, expected[i].start, 1e-9);
      EXPECT_NEAR(seg.span[i].end, expected[i].end, 1e-9);
    }
    clock += seg.speech_dur;
  }
  EXPECT_LT(600.0 - clock, 10.0);
  EXPECT_NEAR(speech_after(t, segs.back().span.back().end), 600.0 - clock, 1e-9);
}

TEST(ExtractSegments, SameSeedSameCutsIndependentOfOtherSessions) {
  std::mt19937 gen(9);
  auto a = random_timeline(gen, "A");
  SegmenterConfig cfg;
  cfg.rng_seed = 77;
  auto first = extract_segments(a, cfg);
  auto b = random_timeline(gen, "B");
  extract_segments(b, cfg);
  auto second = extract_segments(a, cfg);
  ASSERT_EQ(first.size(), second.size());
  for (std::size_t i = 0; i < first.size(); ++i) {
    EXPECT_EQ(first[i].span, second[i].span);
    EXPECT_EQ(first[i].speech_dur, second[i].speech_dur);
  }
}

TEST(ExtractSegments, NonOverlapAndConservationOnRandomTimelines) {
  std::mt19937 gen(2026);
  SegmenterConfig cfg;
  for (int n = 0; n < 1000; ++n) {
    auto t = random_timeline(gen, "t" + std::to_string(n));
    cfg.rng_seed = static_cast<std::uint64_t>(n);
    auto segs = extract_segments(t, cfg);
    expect_non_overlapping(segs);
    double emitted = 0.0;
    for (const auto& s : segs) {
      ASSERT_GE(s.speech_dur, cfg.min_dur - 1e-9);
      ASSERT_LE(s.speech_dur, cfg.max_dur + 1e-9);
      double sum = 0.0;
      for (const auto& iv : s.span) sum += iv.length();
      ASSERT_NEAR(sum, s.speech_dur, 1e-9);
      emitted += s.speech_dur;
    }
    double discarded = segs.empty() ? t.total_speech()
                                    : speech_after(t, segs.back().span.back().end);
    ASSERT_LT(discarded, cfg.min_dur);
    ASSERT_NEAR(emitted + discarded, t.total_speech(), 1e-9) << t.sessionid;
  }
}

TEST(ExtractSegments, DurationsPassKsAgainstUniform) {
  // One very long speech run, so every segment but the last is a plain draw.
  SegmenterConfig cfg;
  cfg.rng_seed = 1234;
  auto segs = extract_segments(timeline({{0.0, 1.0e6}}, "ks"), cfg);
  ASSERT_GT(segs.size(), 10001u);
  std::vector<double> d;
  for (std::size_t i = 0; i < 10000; ++i) d.push_back(segs[i].speech_dur);
  std::sort(d.begin(), d.end());
  const double n = static_cast<double>(d.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    double f = (d[i] - 10.0) / 50.0;
    ks = std::max({ks, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  // Asymptotic Kolmogorov critical value at alpha = 0.01.
  EXPECT_LT(ks, 1.6276 / std::sqrt(n));
}

TEST(ExtractSegments, RejectsBadInput) {
  SegmenterConfig cfg;
  EXPECT_THROW(extract_segments(timeline({{5, 4}}), cfg), std::invalid_argument);
  EXPECT_THROW(extract_segments(timeline({{0, 5}, {4, 8}}), cfg), std::invalid_argument);
  cfg.min_dur = 60;
  EXPECT_THROW(extract_segments(timeline({{0, 100}}), cfg), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Validation

std::vector<SegmentRecord> compliant() {
  std::vector<SegmentRecord> recs;
  for (int s = 0; s < 3; ++s)
    for (int k = 0; k < 3; ++k)
      recs.push_back(record("s" + std::to_string(s) + "_" + std::to_string(k),
                            "subj" + std::to_string(s), s,
                            "sess" + std::to_string(s) + "_" + std::to_string(k)));
  return recs;
}

TEST(ValidateSuperset, CompliantFileIsClean) {
  auto report = validate_superset(compliant());
  EXPECT_TRUE(report.empty()) << report.render();
  EXPECT_EQ(report.render(), "");
}

TEST(ValidateSuperset, TwoSessionSubjectIsReported) {
  auto recs = compliant();
  recs[5].sessionid = recs[4].sessionid;  // subj1 now has two sessions
  auto report = validate_superset(recs);
  ASSERT_EQ(report.violations.size(), 1u) << report.render();
  EXPECT_EQ(report.count(ViolationKind::kMinSessions), 1u);
  EXPECT_EQ(report.render(), "MINSESS\tsubjectid=subj1 sessions=2\n");
}

TEST(ValidateSuperset, SharedSpeakeridIsReported) {
  auto recs = compliant();
  for (int k = 6; k < 9; ++k) recs[static_cast<std::size_t>(k)].speakerid = 1;
  auto report = validate_superset(recs);
  EXPECT_GE(report.count(ViolationKind::kIdMap), 1u);
  EXPECT_NE(report.render().find("IDMAP\tspeakerid=1 shared by"), std::string::npos)
      << report.render();
  EXPECT_EQ(report.count(ViolationKind::kMinSessions), 0u);
}

TEST(ValidateSuperset, DurationOutsideRangeIsReported) {
  auto recs = compliant();
  recs[0].speech_duration = 9.5;
  auto report = validate_superset(recs);
  EXPECT_EQ(report.count(ViolationKind::kDurationRange), 1u);
  EXPECT_EQ(report.render().rfind("DURRANGE\t", 0), 0u);
}

}  // namespace
}  // namespace ctsforge
