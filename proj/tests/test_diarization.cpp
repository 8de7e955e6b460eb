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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "osd/diarization.hpp"
#include "osd/errors.hpp"
#include "osd/rng.hpp"
#include "test_util.hpp"

using namespace osd;
using osd::test::TempDir;
using osd::test::write_text;

namespace {

// (onset_ms, offset_ms, is_overlap) for exact comparisons.
struct MsPiece {
  long onset = 0;
  long offset = 0;
  bool overlap = false;
  bool operator==(const MsPiece&) const = default;
};

std::vector<MsPiece> to_ms(const std::vector<std::pair<TimedSegment, bool>>& pieces) {
  std::vector<MsPiece> out;
  for (const auto& [seg, flag] : pieces) {
    out.push_back({std::lround(seg.onset_s * 1000.0), std::lround(seg.offset_s * 1000.0), flag});
  }
  return out;
}

// Set-algebra oracle on a 1 ms grid: mark every overlap millisecond, then
// read the runs back off.
std::vector<MsPiece> raster_oracle(long sad_on, long sad_off,
                                   const std::vector<std::pair<long, long>>& osd) {
  std::vector<bool> active(static_cast<size_t>(sad_off - sad_on), false);
  for (const auto& [lo, hi] : osd) {
    for (long t = std::max(lo, sad_on); t < std::min(hi, sad_off); ++t) {
      active[static_cast<size_t>(t - sad_on)] = true;
    }
  }
  std::vector<MsPiece> out;
  long run_start = sad_on;
  for (long t = sad_on + 1; t <= sad_off; ++t) {
    if (t == sad_off || active[static_cast<size_t>(t - sad_on)] !=
                            active[static_cast<size_t>(run_start - sad_on)]) {
      out.push_back({run_start, t, active[static_cast<size_t>(run_start - sad_on)]});
      run_start = t;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("splitting reproduces the three canonical cases") {
  // (a) OSD onset before the SAD onset.
  auto a = split_sad_segment({1.0, 5.0, ""}, {{0.0, 2.0, ""}});
  CHECK(to_ms(a) == std::vector<MsPiece>{{1000, 2000, true}, {2000, 5000, false}});

  // (b) OSD offset after the SAD offset.
  auto b = split_sad_segment({1.0, 5.0, ""}, {{4.0, 6.0, ""}});
  CHECK(to_ms(b) == std::vector<MsPiece>{{1000, 4000, false}, {4000, 5000, true}});

  // (c) OSD strictly inside: three pieces.
  auto c = split_sad_segment({1.0, 5.0, ""}, {{2.0, 3.0, ""}});
  CHECK(to_ms(c) ==
        std::vector<MsPiece>{{1000, 2000, false}, {2000, 3000, true}, {3000, 5000, false}});
}

TEST_CASE("splitting merges the OSD union and drops empty pieces") {
  const TimedSegment sad{1.0, 5.0, ""};
  auto pieces = split_sad_segment(
      sad, {{2.0, 3.0, ""}, {1.5, 2.5, ""}, {4.0, 4.5, ""}, {6.0, 7.0, ""}, {0.0, 1.0, ""}});
  CHECK(to_ms(pieces) == std::vector<MsPiece>{{1000, 1500, false},
                                              {1500, 3000, true},
                                              {3000, 4000, false},
                                              {4000, 4500, true},
                                              {4500, 5000, false}});

  // The whole SAD covered: one overlap piece.
  CHECK(to_ms(split_sad_segment(sad, {{0.0, 10.0, ""}})) ==
        std::vector<MsPiece>{{1000, 5000, true}});
  // No OSD: one single piece.
  CHECK(to_ms(split_sad_segment(sad, {})) == std::vector<MsPiece>{{1000, 5000, false}});
  // Abutting OSD intervals merge instead of producing an empty single.
  CHECK(to_ms(split_sad_segment(sad, {{1.0, 2.0, ""}, {2.0, 3.0, ""}})) ==
        std::vector<MsPiece>{{1000, 3000, true}, {3000, 5000, false}});

  CHECK_THROWS_AS(split_sad_segment({5.0, 1.0, ""}, {}), std::invalid_argument);
  CHECK_THROWS_AS(split_sad_segment({-1.0, 1.0, ""}, {}), std::invalid_argument);
  CHECK_THROWS_AS(split_sad_segment({2.0, 2.0, ""}, {}), std::invalid_argument);
}

TEST_CASE("splitting equals the millisecond rasterization oracle") {
  Rng rng(51);
  for (int trial = 0; trial < 1000; ++trial) {
    const long sad_on = static_cast<long>(rng.uniform_int(8000));
    const long sad_off = sad_on + 50 + static_cast<long>(rng.uniform_int(2000));
    const int n_osd = static_cast<int>(rng.uniform_int(6));
    std::vector<std::pair<long, long>> osd_ms;
    std::vector<TimedSegment> osd;
    for (int i = 0; i < n_osd; ++i) {
      const long lo = static_cast<long>(rng.uniform_int(10000)) - 500;
      const long hi = lo + 1 + static_cast<long>(rng.uniform_int(1500));
      osd_ms.emplace_back(lo, hi);
      osd.push_back({lo * 1e-3, hi * 1e-3, ""});
    }
    const auto got = to_ms(split_sad_segment({sad_on * 1e-3, sad_off * 1e-3, ""}, osd));
    const auto want = raster_oracle(sad_on, sad_off, osd_ms);
    CHECK(got == want);

    // Tiling invariants: pieces abut and span the SAD extent exactly.
    REQUIRE(!got.empty());
    CHECK(got.front().onset == sad_on);
    CHECK(got.back().offset == sad_off);
    for (size_t i = 1; i < got.size(); ++i) {
      CHECK(got[i].onset == got[i - 1].offset);
      CHECK(got[i].overlap != got[i - 1].overlap);
    }
  }
}

TEST_CASE("split_all keeps SAD indices and drops stray OSD") {
  const std::vector<TimedSegment> sad = {{0.0, 2.0, ""}, {3.0, 5.0, ""}};

  // Empty OSD: identity, all single.
  auto id = split_all(sad, {});
  REQUIRE(id.size() == 2);
  CHECK(id[0].seg.onset_s == 0.0);
  CHECK(id[0].seg.offset_s == 2.0);
  CHECK_FALSE(id[0].is_overlap);
  CHECK(id[0].sad_index == 0);
  CHECK(id[1].sad_index == 1);

  // OSD equal to a SAD segment: fully overlap.
  auto full = split_all(sad, {{3.0, 5.0, ""}});
  CHECK(full[1].is_overlap);
  CHECK(full[1].seg.onset_s == 3.0);
  CHECK(full[1].seg.offset_s == 5.0);

  // OSD in the gap between SAD segments disappears.
  auto gap = split_all(sad, {{2.2, 2.8, ""}});
  REQUIRE(gap.size() == 2);
  CHECK_FALSE(gap[0].is_overlap);
  CHECK_FALSE(gap[1].is_overlap);

  // One OSD interval spanning the gap clips into both segments.
  auto span = split_all(sad, {{1.0, 4.0, ""}});
  REQUIRE(span.size() == 4);
  CHECK(to_ms({{span[0].seg, span[0].is_overlap}})[0] == MsPiece{0, 1000, false});
  CHECK(to_ms({{span[1].seg, span[1].is_overlap}})[0] == MsPiece{1000, 2000, true});
  CHECK(to_ms({{span[2].seg, span[2].is_overlap}})[0] == MsPiece{3000, 4000, true});
  CHECK(to_ms({{span[3].seg, span[3].is_overlap}})[0] == MsPiece{4000, 5000, false});
  CHECK(span[1].sad_index == 0);
  CHECK(span[2].sad_index == 1);
}

TEST_CASE("second speaker assignment follows the ranking") {
  const std::vector<RankedSegment> rankings = {
      {0.0, 4.0, {"alice", "bob", "carol"}},
      {5.0, 8.0, {"dan"}},
  };
  std::vector<SplitPiece> pieces = {
      {{0.0, 1.0, "single"}, false, 0},
      {{1.0, 2.0, "overlap"}, true, 0},
      {{5.0, 6.0, "overlap"}, true, 1},
  };
  const AssignResult result = assign_second_speaker(pieces, rankings, "meeting", 1);
  REQUIRE(result.records.size() == 4);
  CHECK(result.records[0] == RttmRecord{"meeting", 1, 0.0, 1.0, "alice"});
  CHECK(result.records[1] == RttmRecord{"meeting", 1, 1.0, 1.0, "alice"});
  CHECK(result.records[2] == RttmRecord{"meeting", 1, 1.0, 1.0, "bob"});
  CHECK(result.records[3] == RttmRecord{"meeting", 1, 5.0, 1.0, "dan"});
  CHECK(result.warnings == 1);  // the dan overlap had no second speaker
}

TEST_CASE("assignment merges abutting pieces with one decision") {
  const std::vector<RankedSegment> rankings = {{0.0, 6.0, {"alice", "bob"}}};
  // Two abutting overlap pieces and an abutting single piece with the same
  // rank-1 speaker: overlaps merge together, the single stays separate.
  std::vector<SplitPiece> pieces = {
      {{0.0, 1.0, "overlap"}, true, 0},
      {{1.0, 2.0, "overlap"}, true, 0},
      {{2.0, 3.0, "single"}, false, 0},
  };
  const AssignResult result = assign_second_speaker(pieces, rankings, "f", 1);
  REQUIRE(result.records.size() == 3);
  CHECK(result.records[0] == RttmRecord{"f", 1, 0.0, 2.0, "alice"});
  CHECK(result.records[1] == RttmRecord{"f", 1, 0.0, 2.0, "bob"});
  CHECK(result.records[2] == RttmRecord{"f", 1, 2.0, 1.0, "alice"});

  // A time gap blocks merging.
  std::vector<SplitPiece> gapped = {
      {{0.0, 1.0, "single"}, false, 0},
      {{1.5, 2.0, "single"}, false, 0},
  };
  CHECK(assign_second_speaker(gapped, rankings, "f", 1).records.size() == 2);
}

TEST_CASE("assignment validates pieces against rankings") {
  const std::vector<RankedSegment> rankings = {{0.0, 2.0, {"alice"}}};
  CHECK_THROWS_AS(
      assign_second_speaker({{{0.0, 1.0, ""}, false, 3}}, rankings, "f", 1), DataError);
  CHECK_THROWS_AS(
      assign_second_speaker({{{0.0, 1.0, ""}, false, 0}}, {{0.0, 2.0, {}}}, "f", 1), DataError);
  CHECK_THROWS_AS(
      assign_second_speaker({{{1.0, 3.0, ""}, false, 0}}, rankings, "f", 1), DataError);
}

TEST_CASE("rttm files round trip on the centisecond grid") {
  TempDir dir;
  const std::vector<RttmRecord> records = {
      {"fileA", 1, 0.0, 2.5, "alice"},
      {"fileA", 1, 2.5, 0.01, "bob"},
      {"fileB", 2, 100.25, 30.75, "spk_3"},
  };
  const std::string path = dir.file("hyp.rttm");
  write_rttm(records, path);
  CHECK(read_rttm(path) == records);
}

TEST_CASE("rttm writing rounds times to 0.01 s") {
  TempDir dir;
  write_rttm({{"f", 1, 1.2345, 0.8712, "x"}}, dir.file("r.rttm"));
  const auto got = read_rttm(dir.file("r.rttm"));
  REQUIRE(got.size() == 1);
  CHECK(got[0].onset_s == 1.23);
  CHECK(got[0].duration_s == 0.87);
}

TEST_CASE("rttm reading skips foreign lines and flags bad ones") {
  TempDir dir;
  write_text(dir.file("mixed.rttm"),
             ";; comment\n"
             "SPKR-INFO fileA 1 <NA> <NA> <NA> unknown alice <NA> <NA>\n"
             "SPEAKER fileA 1 0.50 1.00 <NA> <NA> alice <NA> <NA>\n"
             "\n");
  const auto records = read_rttm(dir.file("mixed.rttm"));
  REQUIRE(records.size() == 1);
  CHECK(records[0] == RttmRecord{"fileA", 1, 0.5, 1.0, "alice"});

  write_text(dir.file("short.rttm"), "SPEAKER fileA 1 0.50 1.00 <NA> alice\n");
  CHECK_THROWS_AS(read_rttm(dir.file("short.rttm")), DataError);

  write_text(dir.file("neg.rttm"), "SPEAKER fileA 1 0.50 -1.00 <NA> <NA> alice <NA> <NA>\n");
  CHECK_THROWS_AS(read_rttm(dir.file("neg.rttm")), DataError);

  write_text(dir.file("nan.rttm"), "SPEAKER fileA 1 zero 1.00 <NA> <NA> alice <NA> <NA>\n");
  CHECK_THROWS_AS(read_rttm(dir.file("nan.rttm")), DataError);

  CHECK_THROWS_AS(read_rttm(dir.file("missing.rttm")), DataError);
}

TEST_CASE("sad files accept rttm and two-column formats") {
  TempDir dir;
  write_text(dir.file("sad.rttm"), "SPEAKER f 1 1.00 2.00 <NA> <NA> alice <NA> <NA>\n");
  auto from_rttm = read_sad_file(dir.file("sad.rttm"));
  REQUIRE(from_rttm.size() == 1);
  CHECK(from_rttm[0].onset_s == 1.0);
  CHECK(from_rttm[0].offset_s == 3.0);
  CHECK(from_rttm[0].label == "alice");

  write_text(dir.file("sad.txt"), "0.5 2.25\n\n3 4.5\n");
  auto plain = read_sad_file(dir.file("sad.txt"));
  REQUIRE(plain.size() == 2);
  CHECK(plain[0].onset_s == 0.5);
  CHECK(plain[0].offset_s == 2.25);
  CHECK(plain[1].onset_s == 3.0);

  write_text(dir.file("bad.txt"), "1.0\n");
  CHECK_THROWS_AS(read_sad_file(dir.file("bad.txt")), DataError);
  write_text(dir.file("rev.txt"), "2.0 1.0\n");
  CHECK_THROWS_AS(read_sad_file(dir.file("rev.txt")), DataError);
}

TEST_CASE("ranking files validate speaker lists") {
  TempDir dir;
  write_text(dir.file("rank.txt"), "0.0 4.0 alice,bob\n5.0 8.0 dan\n");
  const auto rankings = read_ranking_file(dir.file("rank.txt"));
  REQUIRE(rankings.size() == 2);
  CHECK(rankings[0].speakers == std::vector<std::string>{"alice", "bob"});
  CHECK(rankings[1].speakers == std::vector<std::string>{"dan"});

  write_text(dir.file("dup.txt"), "0 1 alice,alice\n");
  CHECK_THROWS_AS(read_ranking_file(dir.file("dup.txt")), DataError);
  write_text(dir.file("none.txt"), "0 1 ,\n");
  CHECK_THROWS_AS(read_ranking_file(dir.file("none.txt")), DataError);
  write_text(dir.file("fields.txt"), "0 1\n");
  CHECK_THROWS_AS(read_ranking_file(dir.file("fields.txt")), DataError);
}

TEST_CASE("pieces files round trip exactly") {
  TempDir dir;
  const std::vector<SplitPiece> pieces = {
      {{0.123456789012345, 1.0 / 3.0, "single"}, false, 0},
      {{1.0 / 3.0, 2.75, "overlap"}, true, 7},
  };
  write_pieces_file(pieces, dir.file("p.txt"));
  const auto got = read_pieces_file(dir.file("p.txt"));
  REQUIRE(got.size() == 2);
  CHECK(got[0].seg.onset_s == pieces[0].seg.onset_s);
  CHECK(got[0].seg.offset_s == pieces[0].seg.offset_s);
  CHECK_FALSE(got[0].is_overlap);
  CHECK(got[0].sad_index == 0);
  CHECK(got[1].seg.onset_s == pieces[1].seg.onset_s);
  CHECK(got[1].is_overlap);
  CHECK(got[1].sad_index == 7);

  write_text(dir.file("bad.txt"), "0 1 both 0\n");
  CHECK_THROWS_AS(read_pieces_file(dir.file("bad.txt")), DataError);
}

TEST_CASE("segment files round trip exactly") {
  TempDir dir;
  const std::vector<TimedSegment> segments = {{0.1, 1.0 / 7.0, ""}, {2.5, 97.25, ""}};
  write_segments_file(segments, dir.file("s.txt"));
  const auto got = read_segments_file(dir.file("s.txt"));
  REQUIRE(got.size() == 2);
  CHECK(got[0].onset_s == segments[0].onset_s);
  CHECK(got[0].offset_s == segments[0].offset_s);
  CHECK(got[1].onset_s == segments[1].onset_s);
  CHECK(got[1].offset_s == segments[1].offset_s);

  write_text(dir.file("bad.txt"), "0.5\n");
  CHECK_THROWS_AS(read_segments_file(dir.file("bad.txt")), DataError);
}
