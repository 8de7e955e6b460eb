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
#include <limits>
#include <map>
#include <stdexcept>

#include "osd/errors.hpp"
#include "osd/scoring.hpp"

namespace osd {

namespace {

PrecisionRecall from_counts(std::int64_t tp, std::int64_t fp, std::int64_t fn) {
  PrecisionRecall pr;
  if (tp + fp > 0) pr.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) pr.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  return pr;
}

struct Interval {
  double lo, hi;
  int speaker;  // per-file dense index
};

}  // namespace

PrecisionRecall frame_precision_recall(const std::vector<bool>& predicted,
                                       const FrameLabelTrack& ref, std::uint8_t overlap_label) {
  if (predicted.size() != ref.size()) {
    throw std::invalid_argument("frame_precision_recall: length mismatch");
  }
  std::int64_t tp = 0, fp = 0, fn = 0;
  for (size_t i = 0; i < predicted.size(); ++i) {
    const bool pos = ref[i] == overlap_label;
    if (predicted[i] && pos) tp += 1;
    if (predicted[i] && !pos) fp += 1;
    if (!predicted[i] && pos) fn += 1;
  }
  return from_counts(tp, fp, fn);
}

PrecisionRecall frame_precision_recall(const ScoreTrack& scores, double threshold,
                                       const FrameLabelTrack& ref, std::uint8_t overlap_label) {
  std::vector<bool> predicted(scores.size());
  for (size_t i = 0; i < scores.size(); ++i) predicted[i] = scores[i] > threshold;
  return frame_precision_recall(predicted, ref, overlap_label);
}

double frame_accuracy(const Tensor& posteriors, const FrameLabelTrack& labels) {
  if (posteriors.rank() != 2 || posteriors.dim(0) != static_cast<int>(labels.size())) {
    throw std::invalid_argument("frame_accuracy: posterior/label length mismatch");
  }
  if (labels.empty()) throw std::invalid_argument("frame_accuracy: empty track");
  const int k = posteriors.dim(1);
  std::int64_t correct = 0;
  for (int f = 0; f < posteriors.dim(0); ++f) {
    int argmax = 0;
    for (int c = 1; c < k; ++c) {
      if (posteriors.at(f, c) > posteriors.at(f, argmax)) argmax = c;
    }
    if (argmax == labels[static_cast<size_t>(f)]) correct += 1;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

std::vector<int> optimal_speaker_mapping(const std::vector<std::vector<double>>& overlap_matrix) {
  const int rows = static_cast<int>(overlap_matrix.size());
  if (rows == 0) return {};
  const int cols = static_cast<int>(overlap_matrix[0].size());
  for (const auto& row : overlap_matrix) {
    if (static_cast<int>(row.size()) != cols) {
      throw std::invalid_argument("optimal_speaker_mapping: ragged matrix");
    }
    for (double v : row) {
      if (v < 0.0) throw std::invalid_argument("optimal_speaker_mapping: negative entry");
    }
  }
  if (cols == 0) return std::vector<int>(static_cast<size_t>(rows), -1);

  // Hungarian algorithm with potentials on a padded square matrix; padding
  // entries cost 0, so "matched to padding" means unmatched.
  const int n = std::max(rows, cols);
  const double kInf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> a(static_cast<size_t>(n) + 1,
                                     std::vector<double>(static_cast<size_t>(n) + 1, 0.0));
  for (int i = 1; i <= rows; ++i) {
    for (int j = 1; j <= cols; ++j) a[i][j] = -overlap_matrix[i - 1][j - 1];
  }

  std::vector<double> u(static_cast<size_t>(n) + 1, 0.0), v(static_cast<size_t>(n) + 1, 0.0);
  std::vector<int> p(static_cast<size_t>(n) + 1, 0), way(static_cast<size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<size_t>(n) + 1, kInf);
    std::vector<char> used(static_cast<size_t>(n) + 1, 0);
    do {
      used[static_cast<size_t>(j0)] = 1;
      const int i0 = p[static_cast<size_t>(j0)];
      int j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<size_t>(j)]) continue;
        const double cur = a[static_cast<size_t>(i0)][static_cast<size_t>(j)] - u[static_cast<size_t>(i0)] - v[static_cast<size_t>(j)];
        if (cur < minv[static_cast<size_t>(j)]) {
          minv[static_cast<size_t>(j)] = cur;
          way[static_cast<size_t>(j)] = j0;
        }
        if (minv[static_cast<size_t>(j)] < delta) {
          delta = minv[static_cast<size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<size_t>(j)]) {
          u[static_cast<size_t>(p[static_cast<size_t>(j)])] += delta;
          v[static_cast<size_t>(j)] -= delta;
        } else {
          minv[static_cast<size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<size_t>(j0)];
      p[static_cast<size_t>(j0)] = p[static_cast<size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> mapping(static_cast<size_t>(rows), -1);
  for (int j = 1; j <= n; ++j) {
    const int i = p[static_cast<size_t>(j)];
    if (i >= 1 && i <= rows && j <= cols) mapping[static_cast<size_t>(i - 1)] = j - 1;
  }
  return mapping;
}

DerBreakdown compute_der(const std::vector<RttmRecord>& ref, const std::vector<RttmRecord>& hyp,
                         double collar_s) {
  if (collar_s < 0.0) throw std::invalid_argument("compute_der: negative collar");

  // Group per file; hypothesis-only files still contribute false alarm.
  std::map<std::string, std::pair<std::vector<const RttmRecord*>, std::vector<const RttmRecord*>>>
      files;
  for (const RttmRecord& rec : ref) files[rec.file_id].first.push_back(&rec);
  for (const RttmRecord& rec : hyp) files[rec.file_id].second.push_back(&rec);

  double total_ref_s = 0.0, miss_s = 0.0, fa_s = 0.0, conf_s = 0.0;
  for (const auto& [file_id, recs] : files) {
    const auto& [file_ref, file_hyp] = recs;

    std::map<std::string, int> ref_ids, hyp_ids;
    std::vector<Interval> ref_iv, hyp_iv;
    for (const RttmRecord* rec : file_ref) {
      const auto [it, inserted] = ref_ids.emplace(rec->speaker, static_cast<int>(ref_ids.size()));
      ref_iv.push_back({rec->onset_s, rec->onset_s + rec->duration_s, it->second});
    }
    for (const RttmRecord* rec : file_hyp) {
      const auto [it, inserted] = hyp_ids.emplace(rec->speaker, static_cast<int>(hyp_ids.size()));
      hyp_iv.push_back({rec->onset_s, rec->onset_s + rec->duration_s, it->second});
    }
    const int num_ref = static_cast<int>(ref_ids.size());
    const int num_hyp = static_cast<int>(hyp_ids.size());

    std::vector<std::pair<double, double>> excluded;
    std::vector<double> points;
    for (const Interval& iv : ref_iv) {
      points.push_back(iv.lo);
      points.push_back(iv.hi);
      if (collar_s > 0.0) {
        excluded.emplace_back(iv.lo - collar_s, iv.lo + collar_s);
        excluded.emplace_back(iv.hi - collar_s, iv.hi + collar_s);
      }
    }
    for (const Interval& iv : hyp_iv) {
      points.push_back(iv.lo);
      points.push_back(iv.hi);
    }
    for (const auto& [lo, hi] : excluded) {
      points.push_back(lo);
      points.push_back(hi);
    }
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());

    // Elementary intervals never straddle a segment or collar boundary, so
    // membership is constant inside each and testable at the midpoint.
    std::vector<char> ref_active(static_cast<size_t>(num_ref));
    std::vector<char> hyp_active(static_cast<size_t>(num_hyp));
    std::vector<std::vector<double>> co(static_cast<size_t>(num_ref),
                                        std::vector<double>(static_cast<size_t>(num_hyp), 0.0));

    auto scan = [&](auto&& per_interval) {
      for (size_t k = 0; k + 1 < points.size(); ++k) {
        const double lo = points[k], hi = points[k + 1];
        const double len = hi - lo;
        if (len <= 0.0) continue;
        const double mid = 0.5 * (lo + hi);
        bool skip = false;
        for (const auto& [elo, ehi] : excluded) {
          if (mid > elo && mid < ehi) {
            skip = true;
            break;
          }
        }
        if (skip) continue;
        std::fill(ref_active.begin(), ref_active.end(), 0);
        std::fill(hyp_active.begin(), hyp_active.end(), 0);
        for (const Interval& iv : ref_iv) {
          if (iv.lo <= mid && mid < iv.hi) ref_active[static_cast<size_t>(iv.speaker)] = 1;
        }
        for (const Interval& iv : hyp_iv) {
          if (iv.lo <= mid && mid < iv.hi) hyp_active[static_cast<size_t>(iv.speaker)] = 1;
        }
        per_interval(len);
      }
    };

    scan([&](double len) {
      for (int r = 0; r < num_ref; ++r) {
        if (!ref_active[static_cast<size_t>(r)]) continue;
        total_ref_s += len;
        for (int h = 0; h < num_hyp; ++h) {
          if (hyp_active[static_cast<size_t>(h)]) co[static_cast<size_t>(r)][static_cast<size_t>(h)] += len;
        }
      }
    });

    const std::vector<int> mapping = optimal_speaker_mapping(co);

    scan([&](double len) {
      int r_count = 0, h_count = 0, matched = 0;
      for (int r = 0; r < num_ref; ++r) r_count += ref_active[static_cast<size_t>(r)];
      for (int h = 0; h < num_hyp; ++h) h_count += hyp_active[static_cast<size_t>(h)];
      for (int r = 0; r < num_ref; ++r) {
        if (!ref_active[static_cast<size_t>(r)]) continue;
        const int h = mapping[static_cast<size_t>(r)];
        if (h >= 0 && hyp_active[static_cast<size_t>(h)]) matched += 1;
      }
      miss_s += std::max(r_count - h_count, 0) * len;
      fa_s += std::max(h_count - r_count, 0) * len;
      conf_s += (std::min(r_count, h_count) - matched) * len;
    });
  }

  if (total_ref_s <= 0.0) {
    throw DataError("compute_der: reference contains no scored speech");
  }

  DerBreakdown out;
  out.total_ref_speech_s = total_ref_s;
  out.false_alarm = fa_s / total_ref_s;
  out.miss = miss_s / total_ref_s;
  out.confusion = conf_s / total_ref_s;
  out.der = out.false_alarm + out.miss + out.confusion;
  return out;
}

}  // namespace osd
