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

#ifndef OSD_DIARIZATION_HPP
#define OSD_DIARIZATION_HPP

#include <string>
#include <utility>
#include <vector>

#include "osd/segments.hpp"

namespace osd {

struct RttmRecord {
  std::string file_id;
  int channel = 1;
  double onset_s = 0.0;
  double duration_s = 0.0;
  std::string speaker;

  bool operator==(const RttmRecord& other) const = default;
};

// One piece of a split SAD segment; sad_index points at the parent segment.
struct SplitPiece {
  TimedSegment seg;
  bool is_overlap = false;
  int sad_index = -1;
};

// Speakers of one SAD segment ordered most likely first.
struct RankedSegment {
  double onset_s = 0.0;
  double offset_s = 0.0;
  std::vector<std::string> speakers;
};

// Splits one SAD segment against a set of OSD intervals. Overlap parts are
// the union of OSD intervals clipped to the SAD extent; single parts are the
// complement within it. Pieces are half-open, disjoint, sorted, and tile the
// SAD segment exactly; zero-length pieces are dropped. Throws
// std::invalid_argument for a malformed SAD segment.
std::vector<std::pair<TimedSegment, bool>> split_sad_segment(
    const TimedSegment& sad, const std::vector<TimedSegment>& osd);

// split_sad_segment over a whole file; OSD regions outside every SAD segment
// are discarded. Pieces carry the index of their parent SAD segment.
std::vector<SplitPiece> split_all(const std::vector<TimedSegment>& sad_list,
                                  const std::vector<TimedSegment>& osd_list);

struct AssignResult {
  std::vector<RttmRecord> records;
  int warnings = 0;  // overlap pieces whose ranking had fewer than 2 speakers
};

// Emits hypothesis records: rank-1 speaker for single pieces, rank-1 plus
// rank-2 over the identical extent for overlap pieces. Overlap pieces with a
// single ranked speaker emit one record and count a warning. Adjacent pieces
// with identical (speaker set, is_overlap) are merged before emission.
// rankings[i] must describe sad segment i and contain the piece's extent.
AssignResult assign_second_speaker(const std::vector<SplitPiece>& pieces,
                                   const std::vector<RankedSegment>& rankings,
                                   const std::string& file_id, int channel = 1);

// RTTM: "SPEAKER <file> <chan> <onset> <dur> <NA> <NA> <speaker> <NA> <NA>",
// times serialized at 0.01 s precision. Reading ignores non-SPEAKER lines,
// reports malformed field counts with their line number, and rejects
// negative durations.
void write_rttm(const std::vector<RttmRecord>& records, const std::string& path);
std::vector<RttmRecord> read_rttm(const std::string& path);

// SAD input: RTTM (detected by the SPEAKER tag) or two-column "onset offset"
// lines. Returned segments are labeled with the speaker for RTTM input.
std::vector<TimedSegment> read_sad_file(const std::string& path);

// Ranking lines: "onset offset spk1,spk2,...". Validates non-empty,
// duplicate-free speaker lists.
std::vector<RankedSegment> read_ranking_file(const std::string& path);

// Split-piece exchange format: "onset offset single|overlap sad_index" with
// full floating-point precision, so a file round-trip is value-exact.
void write_pieces_file(const std::vector<SplitPiece>& pieces, const std::string& path);
std::vector<SplitPiece> read_pieces_file(const std::string& path);

// Plain segment lists: "onset offset" per line, full precision.
void write_segments_file(const std::vector<TimedSegment>& segments, const std::string& path);
std::vector<TimedSegment> read_segments_file(const std::string& path);

}  // namespace osd

#endif  // OSD_DIARIZATION_HPP
