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

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "osd/errors.hpp"
#include "osd/rng.hpp"
#include "osd/scoring.hpp"
#include "osd/tensor.hpp"

using namespace osd;

namespace {

// Largest matched sum over every injective row-to-column assignment, by
// enumerating permutations of the padded square.
double brute_force_best_match(const std::vector<std::vector<double>>& m) {
  const int rows = static_cast<int>(m.size());
  const int cols = rows > 0 ? static_cast<int>(m[0].size()) : 0;
  const int n = std::max(rows, cols);
  if (n == 0) return 0.0;
  std::vector<int> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0.0;
  do {
    double sum = 0.0;
    for (int r = 0; r < rows; ++r) {
      if (perm[static_cast<size_t>(r)] < cols) sum += m[static_cast<size_t>(r)][static_cast<size_t>(perm[static_cast<size_t>(r)])];
    }
    best = std::max(best, sum);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// DER components recomputed from scratch on a 1 ms grid with exhaustive
// speaker matching. All inputs are built from integer milliseconds, so cell
// membership and collar exclusion are exact.
struct OracleDer {
  double der, fa, miss, conf, total_s;
};

OracleDer oracle_der(const std::vector<RttmRecord>& ref, const std::vector<RttmRecord>& hyp,
                     long collar_ms) {
  std::map<std::string, std::pair<std::vector<const RttmRecord*>, std::vector<const RttmRecord*>>>
      files;
  for (const auto& r : ref) files[r.file_id].first.push_back(&r);
  for (const auto& h : hyp) files[h.file_id].second.push_back(&h);

  long total = 0, miss = 0, fa = 0, minsum = 0;
  double matched = 0.0;
  for (const auto& [id, recs] : files) {
    std::map<std::string, int> rid, hid;
    struct Seg {
      long lo, hi;
      int spk;
    };
    std::vector<Seg> rseg, hseg;
    long t_max = 0;
    for (const RttmRecord* r : recs.first) {
      const int s = static_cast<int>(rid.emplace(r->speaker, rid.size()).first->second);
      const long lo = std::lround(r->onset_s * 1000.0);
      const long hi = std::lround((r->onset_s + r->duration_s) * 1000.0);
      rseg.push_back({lo, hi, s});
      t_max = std::max(t_max, hi + collar_ms);
    }
    for (const RttmRecord* h : recs.second) {
      const int s = static_cast<int>(hid.emplace(h->speaker, hid.size()).first->second);
      const long lo = std::lround(h->onset_s * 1000.0);
      const long hi = std::lround((h->onset_s + h->duration_s) * 1000.0);
      hseg.push_back({lo, hi, s});
      t_max = std::max(t_max, hi);
    }
    const int nr = static_cast<int>(rid.size());
    const int nh = static_cast<int>(hid.size());
    std::vector<std::vector<double>> co(static_cast<size_t>(nr),
                                        std::vector<double>(static_cast<size_t>(nh), 0.0));
    long f_total = 0, f_miss = 0, f_fa = 0, f_minsum = 0;
    std::vector<char> ra(static_cast<size_t>(nr)), ha(static_cast<size_t>(nh));
    for (long t = 0; t < t_max; ++t) {
      bool excluded = false;
      if (collar_ms > 0) {
        for (const Seg& s : rseg) {
          // Cell midpoint t + 0.5 strictly inside (b - c, b + c), in doubled
          // integer arithmetic.
          const long mid2 = 2 * t + 1;
          if ((mid2 > 2 * (s.lo - collar_ms) && mid2 < 2 * (s.lo + collar_ms)) ||
              (mid2 > 2 * (s.hi - collar_ms) && mid2 < 2 * (s.hi + collar_ms))) {
            excluded = true;
            break;
          }
        }
      }
      if (excluded) continue;
      std::fill(ra.begin(), ra.end(), 0);
      std::fill(ha.begin(), ha.end(), 0);
      for (const Seg& s : rseg) {
        if (s.lo <= t && t < s.hi) ra[static_cast<size_t>(s.spk)] = 1;
      }
      for (const Seg& s : hseg) {
        if (s.lo <= t && t < s.hi) ha[static_cast<size_t>(s.spk)] = 1;
      }
      int rc = 0, hc = 0;
      for (char v : ra) rc += v;
      for (char v : ha) hc += v;
      f_total += rc;
      f_miss += std::max(rc - hc, 0);
      f_fa += std::max(hc - rc, 0);
      f_minsum += std::min(rc, hc);
      for (int r = 0; r < nr; ++r) {
        if (!ra[static_cast<size_t>(r)]) continue;
        for (int h = 0; h < nh; ++h) {
          if (ha[static_cast<size_t>(h)]) co[static_cast<size_t>(r)][static_cast<size_t>(h)] += 1.0;
        }
      }
    }
    total += f_total;
    miss += f_miss;
    fa += f_fa;
    minsum += f_minsum;
    matched += brute_force_best_match(co);
  }
  OracleDer out{};
  out.total_s = static_cast<double>(total) * 1e-3;
  out.miss = static_cast<double>(miss) / static_cast<double>(total);
  out.fa = static_cast<double>(fa) / static_cast<double>(total);
  out.conf = (static_cast<double>(minsum) - matched) / static_cast<double>(total);
  out.der = out.miss + out.fa + out.conf;
  return out;
}

RttmRecord rec(const std::string& file, double onset, double dur, const std::string& spk) {
  return {file, 1, onset, dur, spk};
}

}  // namespace

TEST_CASE("precision and recall count strict threshold exceedances") {
  const ScoreTrack scores = {0.9, 0.5, 0.3, 0.7};
  const FrameLabelTrack ref = {2, 2, 0, 0};
  const PrecisionRecall pr = frame_precision_recall(scores, 0.5, ref);
  REQUIRE(pr.precision.has_value());
  REQUIRE(pr.recall.has_value());
  // 0.5 is not > 0.5: predictions are {1, 0, 0, 1} -> tp 1, fp 1, fn 1.
  CHECK(*pr.precision == 0.5);
  CHECK(*pr.recall == 0.5);

  // The mask overload sees exactly the same counts.
  const PrecisionRecall pm = frame_precision_recall(std::vector<bool>{true, false, false, true}, ref);
  CHECK(*pm.precision == 0.5);
  CHECK(*pm.recall == 0.5);

  // Binary labeling uses a different positive label.
  const PrecisionRecall pb = frame_precision_recall(scores, 0.5, {1, 1, 0, 0}, 1);
  CHECK(*pb.precision == 0.5);
  CHECK(*pb.recall == 0.5);
}

TEST_CASE("undefined ratios are reported as missing, not zero") {
  // Nothing predicted: precision undefined, recall 0.
  PrecisionRecall pr = frame_precision_recall({0.1, 0.2}, 0.9, {2, 0});
  CHECK_FALSE(pr.precision.has_value());
  REQUIRE(pr.recall.has_value());
  CHECK(*pr.recall == 0.0);

  // No reference positives: recall undefined, precision 0.
  pr = frame_precision_recall({0.99, 0.1}, 0.5, {0, 1});
  REQUIRE(pr.precision.has_value());
  CHECK(*pr.precision == 0.0);
  CHECK_FALSE(pr.recall.has_value());

  // Neither side has positives: both undefined.
  pr = frame_precision_recall({0.1}, 0.5, {0});
  CHECK_FALSE(pr.precision.has_value());
  CHECK_FALSE(pr.recall.has_value());

  CHECK_THROWS_AS(frame_precision_recall({0.1, 0.2}, 0.5, {2}), std::invalid_argument);
}

TEST_CASE("frame accuracy takes the posterior argmax") {
  Tensor post({4, 3});
  const double rows[4][3] = {{0.6, 0.3, 0.1}, {0.2, 0.5, 0.3}, {0.1, 0.2, 0.7}, {0.3, 0.3, 0.4}};
  for (int t = 0; t < 4; ++t) {
    for (int k = 0; k < 3; ++k) post.at(t, k) = rows[t][k];
  }
  CHECK(frame_accuracy(post, {0, 1, 2, 2}) == 1.0);
  CHECK(frame_accuracy(post, {1, 1, 2, 0}) == 0.5);
  CHECK_THROWS_AS(frame_accuracy(post, {0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(frame_accuracy(Tensor({0, 3}), {}), std::invalid_argument);
}

TEST_CASE("speaker mapping matches brute force on random matrices") {
  Rng rng(61);
  for (int trial = 0; trial < 300; ++trial) {
    const int rows = 1 + static_cast<int>(rng.uniform_int(5));
    const int cols = 1 + static_cast<int>(rng.uniform_int(5));
    std::vector<std::vector<double>> m(static_cast<size_t>(rows),
                                       std::vector<double>(static_cast<size_t>(cols)));
    // Integer entries on half the trials force exact ties between optima.
    const bool integral = trial % 2 == 0;
    for (auto& row : m) {
      for (double& v : row) {
        v = integral ? static_cast<double>(rng.uniform_int(6)) : rng.uniform(0.0, 10.0);
      }
    }
    const std::vector<int> mapping = optimal_speaker_mapping(m);
    REQUIRE(mapping.size() == static_cast<size_t>(rows));

    double sum = 0.0;
    std::vector<char> used(static_cast<size_t>(cols), 0);
    for (int r = 0; r < rows; ++r) {
      const int c = mapping[static_cast<size_t>(r)];
      if (c < 0) continue;
      REQUIRE(c < cols);
      CHECK_FALSE(used[static_cast<size_t>(c)]);  // one-to-one
      used[static_cast<size_t>(c)] = 1;
      sum += m[static_cast<size_t>(r)][static_cast<size_t>(c)];
    }
    const double best = brute_force_best_match(m);
    if (integral) {
      CHECK(sum == best);
    } else {
      CHECK(sum == doctest::Approx(best).epsilon(1e-12));
    }
  }
}

TEST_CASE("speaker mapping handles degenerate shapes") {
  CHECK(optimal_speaker_mapping({}).empty());
  CHECK(optimal_speaker_mapping({{}, {}}) == std::vector<int>{-1, -1});
  CHECK(optimal_speaker_mapping({{3.0, 1.0}}) == std::vector<int>{0});
  // More rows than columns: exactly one row stays unmatched.
  const auto tall = optimal_speaker_mapping({{5.0}, {7.0}});
  CHECK(tall == std::vector<int>{-1, 0});
  CHECK_THROWS_AS(optimal_speaker_mapping({{1.0}, {1.0, 2.0}}), std::invalid_argument);
  CHECK_THROWS_AS(optimal_speaker_mapping({{-0.5}}), std::invalid_argument);
}

TEST_CASE("der is zero for an identical hypothesis") {
  const std::vector<RttmRecord> ref = {rec("f", 0.0, 3.0, "a"), rec("f", 1.0, 1.0, "b"),
                                       rec("f", 5.0, 1.0, "a")};
  const DerBreakdown d = compute_der(ref, ref);
  CHECK(d.der == 0.0);
  CHECK(d.false_alarm == 0.0);
  CHECK(d.miss == 0.0);
  CHECK(d.confusion == 0.0);
  CHECK(d.total_ref_speech_s == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("an empty hypothesis is pure miss") {
  const std::vector<RttmRecord> ref = {rec("f", 0.0, 3.0, "a"), rec("f", 1.0, 1.0, "b")};
  const DerBreakdown d = compute_der(ref, {});
  CHECK(d.miss == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d.false_alarm == 0.0);
  CHECK(d.confusion == 0.0);
  CHECK(d.der == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("der components land in the expected buckets") {
  // Confusion: one reference speaker scored as two hypothesis speakers.
  DerBreakdown d = compute_der({rec("f", 0.0, 10.0, "a")},
                               {rec("f", 0.0, 6.0, "x"), rec("f", 6.0, 4.0, "y")});
  CHECK(d.confusion == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(d.miss == 0.0);
  CHECK(d.false_alarm == 0.0);
  CHECK(d.der == d.false_alarm + d.miss + d.confusion);

  // False alarm: hypothesis speech beyond the reference extent.
  d = compute_der({rec("f", 0.0, 5.0, "a")}, {rec("f", 0.0, 10.0, "x")});
  CHECK(d.false_alarm == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d.miss == 0.0);
  CHECK(d.confusion == 0.0);

  // Overlapped reference counts speaker-seconds: missing the second speaker
  // of [2, 6] misses 4 of 14 seconds.
  d = compute_der({rec("f", 0.0, 10.0, "a"), rec("f", 2.0, 4.0, "b")},
                  {rec("f", 0.0, 10.0, "a")});
  CHECK(d.total_ref_speech_s == doctest::Approx(14.0).epsilon(1e-12));
  CHECK(d.miss == doctest::Approx(4.0 / 14.0).epsilon(1e-12));
  CHECK(d.confusion == 0.0);
  CHECK(d.false_alarm == 0.0);
}

TEST_CASE("a collar forgives boundary errors") {
  const std::vector<RttmRecord> ref = {rec("f", 0.0, 10.0, "a")};
  const std::vector<RttmRecord> hyp = {rec("f", 0.2, 9.8, "a")};
  const DerBreakdown strict = compute_der(ref, hyp, 0.0);
  CHECK(strict.miss == doctest::Approx(0.02).epsilon(1e-12));

  const DerBreakdown lenient = compute_der(ref, hyp, 0.25);
  CHECK(lenient.der == 0.0);
  CHECK(lenient.total_ref_speech_s == doctest::Approx(9.5).epsilon(1e-12));
}

TEST_CASE("der is invariant to renames and record splits") {
  const std::vector<RttmRecord> ref = {rec("f", 0.0, 10.0, "a"), rec("f", 2.0, 4.0, "b")};
  const std::vector<RttmRecord> hyp = {rec("f", 0.5, 9.0, "x"), rec("f", 2.0, 3.0, "y")};
  const DerBreakdown base = compute_der(ref, hyp);

  const DerBreakdown renamed =
      compute_der(ref, {rec("f", 0.5, 9.0, "zebra"), rec("f", 2.0, 3.0, "quail")});
  CHECK(renamed.der == doctest::Approx(base.der).epsilon(1e-12));
  CHECK(renamed.confusion == doctest::Approx(base.confusion).epsilon(1e-12));

  const DerBreakdown split = compute_der(
      ref, {rec("f", 0.5, 3.5, "x"), rec("f", 4.0, 5.5, "x"), rec("f", 2.0, 3.0, "y")});
  CHECK(split.der == doctest::Approx(base.der).epsilon(1e-12));
  CHECK(split.miss == doctest::Approx(base.miss).epsilon(1e-12));
  CHECK(split.false_alarm == doctest::Approx(base.false_alarm).epsilon(1e-12));
}

TEST_CASE("files pool by speaker-seconds and map speakers independently") {
  // File g is fully missed; its 10 of 20 pooled seconds set the miss rate.
  const DerBreakdown d =
      compute_der({rec("f", 0.0, 10.0, "a"), rec("g", 0.0, 10.0, "a")},
                  {rec("f", 0.0, 10.0, "a")});
  CHECK(d.miss == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(d.der == doctest::Approx(0.5).epsilon(1e-12));

  // A hypothesis-only file contributes pure false alarm.
  const DerBreakdown fa = compute_der({rec("f", 0.0, 10.0, "a")},
                                      {rec("f", 0.0, 10.0, "a"), rec("g", 0.0, 5.0, "x")});
  CHECK(fa.false_alarm == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(fa.miss == 0.0);

  // The same name in different files is a different speaker: a cross-file
  // swap is confusion-free only within each file's own mapping.
  const DerBreakdown swap =
      compute_der({rec("f", 0.0, 10.0, "a"), rec("g", 0.0, 10.0, "b")},
                  {rec("f", 0.0, 10.0, "b"), rec("g", 0.0, 10.0, "a")});
  CHECK(swap.der == 0.0);
}

TEST_CASE("der rejects empty references and negative collars") {
  CHECK_THROWS_AS(compute_der({}, {rec("f", 0.0, 1.0, "x")}), DataError);
  CHECK_THROWS_AS(compute_der({rec("f", 0.0, 1.0, "a")}, {}, -0.1), std::invalid_argument);
}

TEST_CASE("der matches the exhaustive permutation oracle") {
  Rng rng(73);
  int done = 0;
  for (int iter = 0; done < 200 && iter < 400; ++iter) {
    const int n_files = 1 + static_cast<int>(rng.uniform_int(2));
    const long collar_ms = iter % 5 == 4 ? 250 : 0;
    std::vector<RttmRecord> ref, hyp;
    for (int f = 0; f < n_files; ++f) {
      const std::string id = "f" + std::to_string(f);
      const int nr = (f == 0 ? 1 : 0) + static_cast<int>(rng.uniform_int(4));
      const int nh = static_cast<int>(rng.uniform_int(5));
      for (int s = 0; s < nr; ++s) {
        const int n_seg = 1 + static_cast<int>(rng.uniform_int(3));
        for (int k = 0; k < n_seg; ++k) {
          const long on = static_cast<long>(rng.uniform_int(15000));
          const long dur = 100 + static_cast<long>(rng.uniform_int(3900));
          ref.push_back(rec(id, on * 1e-3, dur * 1e-3, "r" + std::to_string(s)));
        }
      }
      for (int s = 0; s < nh; ++s) {
        const int n_seg = 1 + static_cast<int>(rng.uniform_int(3));
        for (int k = 0; k < n_seg; ++k) {
          const long on = static_cast<long>(rng.uniform_int(15000));
          const long dur = 100 + static_cast<long>(rng.uniform_int(3900));
          hyp.push_back(rec(id, on * 1e-3, dur * 1e-3, "h" + std::to_string(s)));
        }
      }
    }
    if (ref.empty()) continue;
    const OracleDer want = oracle_der(ref, hyp, collar_ms);
    if (!(want.total_s > 0.0)) continue;  // collar swallowed all reference speech
    ++done;

    const DerBreakdown got = compute_der(ref, hyp, static_cast<double>(collar_ms) * 1e-3);
    CHECK(got.der == doctest::Approx(want.der).epsilon(1e-9));
    CHECK(got.false_alarm == doctest::Approx(want.fa).epsilon(1e-9));
    CHECK(got.miss == doctest::Approx(want.miss).epsilon(1e-9));
    CHECK(got.confusion == doctest::Approx(want.conf).epsilon(1e-9));
    CHECK(got.total_ref_speech_s == doctest::Approx(want.total_s).epsilon(1e-9));
    CHECK(got.der == got.false_alarm + got.miss + got.confusion);
  }
  CHECK(done == 200);
}
