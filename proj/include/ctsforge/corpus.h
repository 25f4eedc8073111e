// ctsforge/corpus.h

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

// Corpus bookkeeping: the segment metadata table, corpus statistics, and the
// cutting of SAD-marked sessions into segments of uniformly drawn speech
// duration.

#ifndef CTSFORGE_CORPUS_H_
#define CTSFORGE_CORPUS_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ctsforge {

inline constexpr std::array<std::string_view, 10> kCorpusIds = {
    "swb1r2",    "swb2p1", "swb2p2", "swb2p3", "swbcellp1",
    "swbcellp2", "mx3",    "mx45",   "mx6",    "gb1"};

inline constexpr std::array<std::string_view, 10> kMetadataFields = {
    "filename",  "segmentid", "subjectid", "speakerid", "speech_duration",
    "sessionid", "corpusid",  "phoneid",   "gender",    "language"};

inline constexpr double kMinSegmentSpeech = 10.0;
inline constexpr double kMaxSegmentSpeech = 60.0;

bool is_known_corpus(std::string_view corpusid);

enum class Gender { kMale, kFemale };

std::string_view to_string(Gender g);

struct SegmentRecord {
  std::string filename;  // relative path
  std::string segmentid;
  std::string subjectid;
  std::int64_t speakerid = 0;
  double speech_duration = 0.0;  // seconds of speech
  std::string sessionid;
  std::string corpusid;
  std::string phoneid;
  Gender gender = Gender::kMale;
  std::string language;

  bool operator==(const SegmentRecord&) const = default;
};

/// A metadata problem tied to a line of the input (1-based, header is 1).
class MetadataError : public std::runtime_error {
 public:
  MetadataError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

std::vector<SegmentRecord> parse_metadata(const std::filesystem::path& path);
std::vector<SegmentRecord> parse_metadata(std::istream& in);

/// Writes the TSV table. Each comment is emitted as a leading "# " line; the
/// parser skips such lines.
void write_metadata(std::ostream& out, const std::vector<SegmentRecord>& records,
                    const std::vector<std::string>& comments = {});
void write_metadata(const std::filesystem::path& path,
                    const std::vector<SegmentRecord>& records,
                    const std::vector<std::string>& comments = {});

/// Renumbers speakerid densely from zero in order of first appearance of
/// subjectid.
void assign_speaker_ids(std::vector<SegmentRecord>& records);

struct CorpusCounts {
  std::size_t segments = 0;
  std::size_t speakers = 0;
  std::size_t sessions = 0;
  bool operator==(const CorpusCounts&) const = default;
};

struct CorpusTotals {
  std::size_t segments = 0;
  std::size_t speakers = 0;
  std::size_t males = 0;
  std::size_t females = 0;
  bool operator==(const CorpusTotals&) const = default;
};

struct CorpusStats {
  std::map<std::string, CorpusCounts> per_corpus;
  CorpusTotals totals;
};

CorpusStats compute_stats(const std::vector<SegmentRecord>& records);

/// Table with one row per corpus (in canonical corpusid order) and totals.
std::string render_stats(const CorpusStats& stats);

// ---------------------------------------------------------------------------
// Segmentation

struct Interval {
  double start = 0.0;
  double end = 0.0;
  double length() const { return end - start; }
  bool operator==(const Interval&) const = default;
};

struct SessionTimeline {
  std::string sessionid;
  std::vector<Interval> speech_intervals;  // sorted, disjoint, end > start

  double total_speech() const;
  /// Throws std::invalid_argument unless intervals are sorted, disjoint and
  /// non-empty.
  void check() const;
};

struct SegmenterConfig {
  double min_dur = kMinSegmentSpeech;
  double max_dur = kMaxSegmentSpeech;
  std::uint64_t rng_seed = 0;
};

struct Segment {
  std::vector<Interval> span;  // may cross SAD gaps
  double speech_dur = 0.0;
};

/// Cuts a session into consecutive segments. Each segment draws its speech
/// duration d ~ U[min_dur, max_dur] and consumes that much speech from the
/// current position. When the speech left is below min_dur the session ends
/// and the rest is discarded; when it is at least min_dur but below d, the
/// final segment takes all of it.
///
/// The draw stream is seeded with derive_seed(cfg.rng_seed, sessionid), so
/// sessions can be cut independently and in any order.
std::vector<Segment> extract_segments(const SessionTimeline& timeline,
                                      const SegmenterConfig& cfg);

// ---------------------------------------------------------------------------
// Validation

enum class ViolationKind { kMinSessions, kDurationRange, kIdMap };

std::string_view tag(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool empty() const { return violations.empty(); }
  std::size_t count(ViolationKind kind) const;
  /// One "TAG\tmessage" line per violation.
  std::string render() const;
};

inline constexpr std::size_t kMinSessionsPerSubject = 3;

ValidationReport validate_superset(const std::vector<SegmentRecord>& records);

}  // namespace ctsforge

#endif  // CTSFORGE_CORPUS_H_
