// corpus.cc

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

#include "ctsforge/corpus.h"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "ctsforge/random.h"
#include "ctsforge/text.h"

namespace ctsforge {

bool is_known_corpus(std::string_view corpusid) {
  return std::find(kCorpusIds.begin(), kCorpusIds.end(), corpusid) !=
         kCorpusIds.end();
}

std::string_view to_string(Gender g) {
  return g == Gender::kMale ? "male" : "female";
}

namespace {

SegmentRecord parse_row(const std::vector<std::string_view>& cols,
                        std::size_t line) {
  SegmentRecord r;
  r.filename = cols[0];
  r.segmentid = cols[1];
  r.subjectid = cols[2];
  if (!parse_number(cols[3], r.speakerid) || r.speakerid < 0)
    throw MetadataError(line, "bad speakerid '" + std::string(cols[3]) + "'");
  if (!parse_number(cols[4], r.speech_duration))
    throw MetadataError(line,
                        "bad speech_duration '" + std::string(cols[4]) + "'");
  if (!(r.speech_duration >= kMinSegmentSpeech &&
        r.speech_duration <= kMaxSegmentSpeech))
    throw MetadataError(line, "duration out of range: " + std::string(cols[4]));
  r.sessionid = cols[5];
  r.corpusid = cols[6];
  if (!is_known_corpus(r.corpusid))
    throw MetadataError(line, "unknown corpusid '" + r.corpusid + "'");
  r.phoneid = cols[7];
  if (cols[8] == "male")
    r.gender = Gender::kMale;
  else if (cols[8] == "female")
    r.gender = Gender::kFemale;
  else
    throw MetadataError(line, "unknown gender '" + std::string(cols[8]) + "'");
  r.language = cols[9];
  return r;
}

}  // namespace

std::vector<SegmentRecord> parse_metadata(std::istream& in) {
  std::vector<SegmentRecord> records;
  std::string text;
  std::size_t line = 0;
  bool have_header = false;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty() || text.front() == '#') continue;
    auto cols = split_tabs(text);
    if (!have_header) {
      if (cols.size() != kMetadataFields.size() ||
          !std::equal(cols.begin(), cols.end(), kMetadataFields.begin()))
        throw MetadataError(line, "header must name the ten metadata fields "
                                  "in order");
      have_header = true;
      continue;
    }
    if (cols.size() != kMetadataFields.size())
      throw MetadataError(line, "malformed row: expected 10 columns, got " +
                                    std::to_string(cols.size()));
    records.push_back(parse_row(cols, line));
  }
  if (!have_header) throw MetadataError(line, "missing header row");
  return records;
}

std::vector<SegmentRecord> parse_metadata(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return parse_metadata(in);
}

void write_metadata(std::ostream& out, const std::vector<SegmentRecord>& records,
                    const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
  for (std::size_t i = 0; i < kMetadataFields.size(); ++i)
    out << (i ? "\t" : "") << kMetadataFields[i];
  out << '\n';
  char dur[32];
  for (const auto& r : records) {
    std::snprintf(dur, sizeof dur, "%.2f", r.speech_duration);
    out << r.filename << '\t' << r.segmentid << '\t' << r.subjectid << '\t'
        << r.speakerid << '\t' << dur << '\t' << r.sessionid << '\t'
        << r.corpusid << '\t' << r.phoneid << '\t' << to_string(r.gender)
        << '\t' << r.language << '\n';
  }
}

void write_metadata(const std::filesystem::path& path,
                    const std::vector<SegmentRecord>& records,
                    const std::vector<std::string>& comments) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_metadata(out, records, comments);
}

void assign_speaker_ids(std::vector<SegmentRecord>& records) {
  std::unordered_map<std::string, std::int64_t> ids;
  for (auto& r : records) {
    auto [it, inserted] =
        ids.try_emplace(r.subjectid, static_cast<std::int64_t>(ids.size()));
    r.speakerid = it->second;
  }
}

CorpusStats compute_stats(const std::vector<SegmentRecord>& records) {
  struct Acc {
    std::size_t segments = 0;
    std::unordered_set<std::string> subjects, sessions;
  };
  std::map<std::string, Acc> acc;
  std::unordered_map<std::string, Gender> subject_gender;
  for (const auto& r : records) {
    auto& a = acc[r.corpusid];
    ++a.segments;
    a.subjects.insert(r.subjectid);
    a.sessions.insert(r.sessionid);
    subject_gender.try_emplace(r.subjectid, r.gender);
  }
  CorpusStats stats;
  for (const auto& [corpus, a] : acc) {
    stats.per_corpus[corpus] = {a.segments, a.subjects.size(),
                                a.sessions.size()};
    stats.totals.segments += a.segments;
  }
  stats.totals.speakers = subject_gender.size();
  for (const auto& [subject, g] : subject_gender)
    ++(g == Gender::kMale ? stats.totals.males : stats.totals.females);
  return stats;
}

std::string render_stats(const CorpusStats& stats) {
  std::ostringstream os;
  os << std::left << std::setw(12) << "corpusid" << std::right << std::setw(12)
     << "#segments" << std::setw(12) << "#speakers" << std::setw(12)
     << "#sessions" << '\n';
  auto row = [&](std::string_view id, const CorpusCounts& c) {
    os << std::left << std::setw(12) << id << std::right << std::setw(12)
       << c.segments << std::setw(12) << c.speakers << std::setw(12)
       << c.sessions << '\n';
  };
  for (auto id : kCorpusIds) {
    auto it = stats.per_corpus.find(std::string(id));
    if (it != stats.per_corpus.end()) row(id, it->second);
  }
  const auto& t = stats.totals;
  os << "total segments: " << t.segments << '\n'
     << "total speakers: " << t.speakers << " (" << t.males << " male, "
     << t.females << " female)\n";
  return os.str();
}

// ---------------------------------------------------------------------------

double SessionTimeline::total_speech() const {
  double total = 0.0;
  for (const auto& iv : speech_intervals) total += iv.length();
  return total;
}

void SessionTimeline::check() const {
  for (std::size_t i = 0; i < speech_intervals.size(); ++i) {
    const auto& iv = speech_intervals[i];
    if (!(iv.end > iv.start))
      throw std::invalid_argument("session " + sessionid +
                                  ": empty or reversed interval");
    if (i > 0 && iv.start < speech_intervals[i - 1].end)
      throw std::invalid_argument("session " + sessionid +
                                  ": intervals overlap or are unsorted");
  }
}

std::vector<Segment> extract_segments(const SessionTimeline& timeline,
                                      const SegmenterConfig& cfg) {
  timeline.check();
  if (!(cfg.min_dur > 0.0 && cfg.min_dur < cfg.max_dur))
    throw std::invalid_argument("segmenter needs 0 < min_dur < max_dur");

  const auto& ivs = timeline.speech_intervals;
  Rng rng(derive_seed(cfg.rng_seed, timeline.sessionid));
  std::vector<Segment> segments;
  double remaining = timeline.total_speech();
  std::size_t idx = 0;
  double pos = ivs.empty() ? 0.0 : ivs.front().start;

  while (remaining >= cfg.min_dur && idx < ivs.size()) {
    double want = rng.uniform(cfg.min_dur, cfg.max_dur);
    bool take_rest = remaining < want;
    Segment seg;
    if (take_rest) {
      for (; idx < ivs.size(); ++idx) {
        double start = std::max(pos, ivs[idx].start);
        seg.span.push_back({start, ivs[idx].end});
      }
    } else {
      double need = want;
      while (need > 0.0 && idx < ivs.size()) {
        double avail = ivs[idx].end - pos;
        if (avail <= need) {
          seg.span.push_back({pos, ivs[idx].end});
          need -= avail;
          if (++idx < ivs.size()) pos = ivs[idx].start;
        } else {
          seg.span.push_back({pos, pos + need});
          pos += need;
          need = 0.0;
        }
      }
    }
    for (const auto& iv : seg.span) seg.speech_dur += iv.length();
    remaining -= seg.speech_dur;
    segments.push_back(std::move(seg));
  }
  return segments;
}

// ---------------------------------------------------------------------------

std::string_view tag(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kMinSessions:
      return "MINSESS";
    case ViolationKind::kDurationRange:
      return "DURRANGE";
    case ViolationKind::kIdMap:
      return "IDMAP";
  }
  return "?";
}

std::size_t ValidationReport::count(ViolationKind kind) const {
  return std::count_if(violations.begin(), violations.end(),
                       [kind](const Violation& v) { return v.kind == kind; });
}

std::string ValidationReport::render() const {
  std::string out;
  for (const auto& v : violations) {
    out += tag(v.kind);
    out += '\t';
    out += v.message;
    out += '\n';
  }
  return out;
}

ValidationReport validate_superset(const std::vector<SegmentRecord>& records) {
  ValidationReport report;
  auto add = [&](ViolationKind k, std::string msg) {
    report.violations.push_back({k, std::move(msg)});
  };

  // Subjects in order of first appearance so the report is stable.
  std::vector<std::string> subjects;
  std::unordered_map<std::string, std::set<std::string>> sessions;
  std::unordered_map<std::string, std::set<std::int64_t>> subject_to_ids;
  std::map<std::int64_t, std::set<std::string>> id_to_subjects;

  for (const auto& r : records) {
    if (!sessions.contains(r.subjectid)) subjects.push_back(r.subjectid);
    sessions[r.subjectid].insert(r.sessionid);
    subject_to_ids[r.subjectid].insert(r.speakerid);
    id_to_subjects[r.speakerid].insert(r.subjectid);
    if (!(r.speech_duration >= kMinSegmentSpeech &&
          r.speech_duration <= kMaxSegmentSpeech)) {
      std::ostringstream os;
      os << "segmentid=" << r.segmentid
         << " speech_duration=" << r.speech_duration;
      add(ViolationKind::kDurationRange, os.str());
    }
  }

  for (const auto& s : subjects) {
    if (sessions[s].size() < kMinSessionsPerSubject)
      add(ViolationKind::kMinSessions,
          "subjectid=" + s + " sessions=" + std::to_string(sessions[s].size()));
    const auto& ids = subject_to_ids[s];
    if (ids.size() > 1) {
      std::string msg = "subjectid=" + s + " has speakerids";
      for (auto id : ids) msg += " " + std::to_string(id);
      add(ViolationKind::kIdMap, msg);
    }
  }
  for (const auto& [id, subs] : id_to_subjects) {
    if (subs.size() > 1) {
      std::string msg = "speakerid=" + std::to_string(id) + " shared by";
      for (const auto& s : subs) msg += " " + s;
      add(ViolationKind::kIdMap, msg);
    }
  }
  // Dense numbering: the ids in use must be exactly 0..n-1.
  std::int64_t expect = 0;
  for (const auto& [id, subs] : id_to_subjects) {
    if (id != expect) {
      add(ViolationKind::kIdMap, "speakerid numbering not dense: missing " +
                                     std::to_string(expect));
      break;
    }
    ++expect;
  }
  return report;
}

}  // namespace ctsforge
