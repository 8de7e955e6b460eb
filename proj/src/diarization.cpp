// Copyright (c) 2026 The osdkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "osd/diarization.hpp"
#include "osd/errors.hpp"

namespace osd {

namespace {

std::vector<std::string> tokenize(const std::string& line) {
  std::istringstream iss(line);
  std::vector<std::string> tokens;
  std::string token;
  while (iss >> token) tokens.push_back(token);
  return tokens;
}

double parse_double(const std::string& token, const std::string& context) {
  try {
    size_t pos = 0;
    const double value = std::stod(token, &pos);
    if (pos != token.size()) throw std::invalid_argument("trailing characters");
    return value;
  } catch (const std::exception&) {
    throw DataError("cannot parse number '" + token + "' " + context);
  }
}

}  // namespace

std::vector<std::pair<TimedSegment, bool>> split_sad_segment(
    const TimedSegment& sad, const std::vector<TimedSegment>& osd) {
  if (!(sad.onset_s >= 0.0) || !(sad.onset_s < sad.offset_s)) {
    throw std::invalid_argument("split_sad_segment: malformed SAD segment");
  }

  // Clip OSD intervals to the SAD extent and merge them into a disjoint
  // sorted union; boundary values are reused verbatim so the output pieces
  // tile the SAD segment with exactly shared endpoints.
  std::vector<std::pair<double, double>> clipped;
  for (const TimedSegment& seg : osd) {
    const double lo = std::max(seg.onset_s, sad.onset_s);
    const double hi = std::min(seg.offset_s, sad.offset_s);
    if (lo < hi) clipped.emplace_back(lo, hi);
  }
  std::sort(clipped.begin(), clipped.end());
  std::vector<std::pair<double, double>> merged;
  for (const auto& [lo, hi] : clipped) {
    if (!merged.empty() && lo <= merged.back().second) {
      merged.back().second = std::max(merged.back().second, hi);
    } else {
      merged.emplace_back(lo, hi);
    }
  }

  std::vector<std::pair<TimedSegment, bool>> pieces;
  double cursor = sad.onset_s;
  for (const auto& [lo, hi] : merged) {
    if (cursor < lo) pieces.push_back({{cursor, lo, "single"}, false});
    pieces.push_back({{lo, hi, "overlap"}, true});
    cursor = hi;
  }
  if (cursor < sad.offset_s) pieces.push_back({{cursor, sad.offset_s, "single"}, false});
  return pieces;
}

std::vector<SplitPiece> split_all(const std::vector<TimedSegment>& sad_list,
                                  const std::vector<TimedSegment>& osd_list) {
  std::vector<SplitPiece> result;
  for (size_t i = 0; i < sad_list.size(); ++i) {
    for (const auto& [seg, is_overlap] : split_sad_segment(sad_list[i], osd_list)) {
      result.push_back({seg, is_overlap, static_cast<int>(i)});
    }
  }
  return result;
}

AssignResult assign_second_speaker(const std::vector<SplitPiece>& pieces,
                                   const std::vector<RankedSegment>& rankings,
                                   const std::string& file_id, int channel) {
  struct Assigned {
    TimedSegment seg;
    bool is_overlap;
    std::vector<std::string> speakers;
  };
  AssignResult result;

  std::vector<Assigned> assigned;
  for (const SplitPiece& piece : pieces) {
    if (piece.sad_index < 0 || piece.sad_index >= static_cast<int>(rankings.size())) {
      throw DataError("assign_second_speaker: piece references SAD segment " +
                      std::to_string(piece.sad_index) + " but only " +
                      std::to_string(rankings.size()) + " rankings were given");
    }
    const RankedSegment& ranking = rankings[static_cast<size_t>(piece.sad_index)];
    if (ranking.speakers.empty()) {
      throw DataError("assign_second_speaker: empty speaker ranking for SAD segment " +
                      std::to_string(piece.sad_index));
    }
    if (piece.seg.onset_s < ranking.onset_s - 1e-3 || piece.seg.offset_s > ranking.offset_s + 1e-3) {
      throw DataError("assign_second_speaker: piece extent lies outside its ranking segment");
    }
    Assigned a{piece.seg, piece.is_overlap, {ranking.speakers[0]}};
    if (piece.is_overlap) {
      if (ranking.speakers.size() >= 2) {
        a.speakers.push_back(ranking.speakers[1]);
      } else {
        result.warnings += 1;
      }
    }
    assigned.push_back(std::move(a));
  }

  // Merge abutting pieces carrying the same decision before emitting RTTM.
  std::vector<Assigned> merged;
  for (Assigned& a : assigned) {
    if (!merged.empty() && merged.back().seg.offset_s == a.seg.onset_s &&
        merged.back().is_overlap == a.is_overlap && merged.back().speakers == a.speakers) {
      merged.back().seg.offset_s = a.seg.offset_s;
    } else {
      merged.push_back(std::move(a));
    }
  }

  for (const Assigned& a : merged) {
    for (const std::string& speaker : a.speakers) {
      result.records.push_back(
          {file_id, channel, a.seg.onset_s, a.seg.offset_s - a.seg.onset_s, speaker});
    }
  }
  return result;
}

void write_rttm(const std::vector<RttmRecord>& records, const std::string& path) {
  std::ofstream file(path);
  if (!file) throw DataError("cannot open RTTM for writing: " + path);
  char line[512];
  for (const RttmRecord& rec : records) {
    std::snprintf(line, sizeof(line), "SPEAKER %s %d %.2f %.2f <NA> <NA> %s <NA> <NA>\n",
                  rec.file_id.c_str(), rec.channel, rec.onset_s, rec.duration_s,
                  rec.speaker.c_str());
    file << line;
  }
  if (!file) throw DataError("short write to RTTM: " + path);
}

std::vector<RttmRecord> read_rttm(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw DataError("cannot open RTTM: " + path);
  std::vector<RttmRecord> records;
  std::string line;
  size_t line_number = 0;
  while (std::getline(file, line)) {
    ++line_number;
    const std::vector<std::string> tokens = tokenize(line);
    if (tokens.empty() || tokens[0] != "SPEAKER") continue;
    if (tokens.size() != 10) {
      throw DataError("RTTM line " + std::to_string(line_number) + " has " +
                      std::to_string(tokens.size()) + " fields, expected 10: " + path);
    }
    RttmRecord rec;
    rec.file_id = tokens[1];
    rec.channel = static_cast<int>(parse_double(tokens[2], "in RTTM line " + std::to_string(line_number)));
    rec.onset_s = parse_double(tokens[3], "in RTTM line " + std::to_string(line_number));
    rec.duration_s = parse_double(tokens[4], "in RTTM line " + std::to_string(line_number));
    rec.speaker = tokens[7];
    if (rec.duration_s < 0.0) {
      throw DataError("negative duration in RTTM line " + std::to_string(line_number) + ": " + path);
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<TimedSegment> read_sad_file(const std::string& path) {
  std::ifstream probe(path);
  if (!probe) throw DataError("cannot open SAD file: " + path);
  std::string first_token;
  probe >> first_token;
  probe.close();

  std::vector<TimedSegment> segments;
  if (first_token == "SPEAKER") {
    for (const RttmRecord& rec : read_rttm(path)) {
      segments.push_back({rec.onset_s, rec.onset_s + rec.duration_s, rec.speaker});
    }
    return segments;
  }

  std::ifstream file(path);
  std::string line;
  size_t line_number = 0;
  while (std::getline(file, line)) {
    ++line_number;
    const std::vector<std::string> tokens = tokenize(line);
    if (tokens.empty()) continue;
    if (tokens.size() != 2) {
      throw DataError("SAD line " + std::to_string(line_number) +
                      " must be 'onset offset': " + path);
    }
    TimedSegment seg;
    seg.onset_s = parse_double(tokens[0], "in SAD line " + std::to_string(line_number));
    seg.offset_s = parse_double(tokens[1], "in SAD line " + std::to_string(line_number));
    if (seg.offset_s < seg.onset_s) {
      throw DataError("SAD line " + std::to_string(line_number) + " has offset before onset: " +
                      path);
    }
    segments.push_back(std::move(seg));
  }
  return segments;
}

std::vector<RankedSegment> read_ranking_file(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw DataError("cannot open ranking file: " + path);
  std::vector<RankedSegment> rankings;
  std::string line;
  size_t line_number = 0;
  while (std::getline(file, line)) {
    ++line_number;
    const std::vector<std::string> tokens = tokenize(line);
    if (tokens.empty()) continue;
    if (tokens.size() != 3) {
      throw DataError("ranking line " + std::to_string(line_number) +
                      " must be 'onset offset spk1,spk2,...': " + path);
    }
    RankedSegment ranked;
    ranked.onset_s = parse_double(tokens[0], "in ranking line " + std::to_string(line_number));
    ranked.offset_s = parse_double(tokens[1], "in ranking line " + std::to_string(line_number));
    std::stringstream speakers(tokens[2]);
    std::string speaker;
    while (std::getline(speakers, speaker, ',')) {
      if (!speaker.empty()) ranked.speakers.push_back(speaker);
    }
    if (ranked.speakers.empty()) {
      throw DataError("ranking line " + std::to_string(line_number) + " has no speakers: " + path);
    }
    std::set<std::string> unique(ranked.speakers.begin(), ranked.speakers.end());
    if (unique.size() != ranked.speakers.size()) {
      throw DataError("ranking line " + std::to_string(line_number) +
                      " repeats a speaker: " + path);
    }
    rankings.push_back(std::move(ranked));
  }
  return rankings;
}

void write_pieces_file(const std::vector<SplitPiece>& pieces, const std::string& path) {
  std::ofstream file(path);
  if (!file) throw DataError("cannot open pieces file for writing: " + path);
  char line[160];
  for (const SplitPiece& piece : pieces) {
    std::snprintf(line, sizeof(line), "%.17g %.17g %s %d\n", piece.seg.onset_s,
                  piece.seg.offset_s, piece.is_overlap ? "overlap" : "single", piece.sad_index);
    file << line;
  }
  if (!file) throw DataError("short write to pieces file: " + path);
}

std::vector<SplitPiece> read_pieces_file(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw DataError("cannot open pieces file: " + path);
  std::vector<SplitPiece> pieces;
  std::string line;
  size_t line_number = 0;
  while (std::getline(file, line)) {
    ++line_number;
    const std::vector<std::string> tokens = tokenize(line);
    if (tokens.empty()) continue;
    if (tokens.size() != 4 || (tokens[2] != "single" && tokens[2] != "overlap")) {
      throw DataError("pieces line " + std::to_string(line_number) +
                      " must be 'onset offset single|overlap sad_index': " + path);
    }
    SplitPiece piece;
    piece.seg.onset_s = parse_double(tokens[0], "in pieces line " + std::to_string(line_number));
    piece.seg.offset_s = parse_double(tokens[1], "in pieces line " + std::to_string(line_number));
    piece.is_overlap = (tokens[2] == "overlap");
    piece.seg.label = tokens[2];
    piece.sad_index = static_cast<int>(
        parse_double(tokens[3], "in pieces line " + std::to_string(line_number)));
    pieces.push_back(std::move(piece));
  }
  return pieces;
}

void write_segments_file(const std::vector<TimedSegment>& segments, const std::string& path) {
  std::ofstream file(path);
  if (!file) throw DataError("cannot open segments file for writing: " + path);
  char line[96];
  for (const TimedSegment& seg : segments) {
    std::snprintf(line, sizeof(line), "%.17g %.17g\n", seg.onset_s, seg.offset_s);
    file << line;
  }
  if (!file) throw DataError("short write to segments file: " + path);
}

std::vector<TimedSegment> read_segments_file(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw DataError("cannot open segments file: " + path);
  std::vector<TimedSegment> segments;
  std::string line;
  size_t line_number = 0;
  while (std::getline(file, line)) {
    ++line_number;
    const std::vector<std::string> tokens = tokenize(line);
    if (tokens.empty()) continue;
    if (tokens.size() != 2) {
      throw DataError("segments line " + std::to_string(line_number) +
                      " must be 'onset offset': " + path);
    }
    TimedSegment seg;
    seg.onset_s = parse_double(tokens[0], "in segments line " + std::to_string(line_number));
    seg.offset_s = parse_double(tokens[1], "in segments line " + std::to_string(line_number));
    segments.push_back(std::move(seg));
  }
  return segments;
}

}  // namespace osd
