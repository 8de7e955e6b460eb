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
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "osd/errors.hpp"
#include "osd/inference.hpp"

namespace osd {

std::vector<int> window_starts(int num_frames, int seq_len, int shift) {
  if (num_frames < 1) throw std::invalid_argument("window_starts: need at least one frame");
  if (seq_len < 1 || shift < 1) throw std::invalid_argument("window_starts: bad window geometry");
  if (num_frames <= seq_len) return {0};
  std::vector<int> starts;
  for (int s = 0; s + seq_len <= num_frames; s += shift) starts.push_back(s);
  if (starts.back() != num_frames - seq_len) starts.push_back(num_frames - seq_len);
  return starts;
}

std::vector<int> coverage_counts(int num_frames, int seq_len, int shift) {
  std::vector<int> counts(static_cast<size_t>(num_frames), 0);
  for (int s : window_starts(num_frames, seq_len, shift)) {
    const int end = std::min(s + seq_len, num_frames);
    for (int f = s; f < end; ++f) counts[static_cast<size_t>(f)] += 1;
  }
  return counts;
}

Tensor sliding_posteriors(CrnnModel& model, const MelSpectrogram& mel) {
  const ModelConfig& cfg = model.config();
  if (mel.num_bins != cfg.mel_bins) {
    throw std::invalid_argument("sliding_posteriors: mel bin count does not match the model");
  }
  if (mel.num_frames < 1) throw std::invalid_argument("sliding_posteriors: empty spectrogram");

  const int t_total = mel.num_frames;
  const int seq = cfg.seq_len;
  const int dup = cfg.frames_per_output();
  const int k = cfg.num_classes;

  const int t_padded = std::max(t_total, seq);
  Tensor acc({t_total, k});
  const std::vector<int> starts = window_starts(t_padded, seq, 50);
  Tensor window({seq, cfg.mel_bins});
  for (int s : starts) {
    for (int i = 0; i < seq; ++i) {
      const int src = s + i;
      for (int b = 0; b < cfg.mel_bins; ++b) {
        window.at(i, b) = (src < t_total) ? mel.at(src, b) : 0.0;
      }
    }
    const Tensor probs = nn::softmax(model.forward(window, nn::Mode::kEval));
    for (int j = 0; j < probs.dim(0); ++j) {
      for (int r = 0; r < dup; ++r) {
        const int frame = s + j * dup + r;
        if (frame >= t_total) continue;
        for (int c = 0; c < k; ++c) acc.at(frame, c) += probs.at(j, c);
      }
    }
  }

  const std::vector<int> counts = coverage_counts(t_padded, seq, 50);
  for (int f = 0; f < t_total; ++f) {
    const double inv = 1.0 / counts[static_cast<size_t>(f)];
    for (int c = 0; c < k; ++c) acc.at(f, c) *= inv;
  }
  return acc;
}

ScoreTrack sliding_score(CrnnModel& model, const MelSpectrogram& mel) {
  const Tensor posteriors = sliding_posteriors(model, mel);
  const int k = posteriors.dim(1);
  ScoreTrack scores(static_cast<size_t>(posteriors.dim(0)));
  for (int f = 0; f < posteriors.dim(0); ++f) scores[static_cast<size_t>(f)] = posteriors.at(f, k - 1);
  return scores;
}

std::vector<TimedSegment> scores_to_segments(const ScoreTrack& scores, double threshold,
                                             double min_duration_s) {
  if (threshold < 0.0 || threshold > 1.0) {
    throw std::invalid_argument("scores_to_segments: threshold must lie in [0, 1]");
  }
  std::vector<TimedSegment> segments;
  const int n = static_cast<int>(scores.size());
  int run_start = -1;
  for (int f = 0; f <= n; ++f) {
    const bool active = (f < n) && (scores[static_cast<size_t>(f)] > threshold);
    if (active && run_start < 0) run_start = f;
    if (!active && run_start >= 0) {
      const double duration = (f - run_start) * kFramePeriodS;
      if (duration >= min_duration_s) {
        segments.push_back({run_start * kFramePeriodS, f * kFramePeriodS, "overlap"});
      }
      run_start = -1;
    }
  }
  return segments;
}

double calibrate_threshold(const std::vector<std::pair<ScoreTrack, FrameLabelTrack>>& scored_dev,
                           double target_precision, std::uint8_t overlap_label) {
  std::vector<std::pair<double, bool>> frames;  // (score, is reference positive)
  for (const auto& [scores, labels] : scored_dev) {
    if (scores.size() != labels.size()) {
      throw DataError("calibrate_threshold: score/label length mismatch");
    }
    for (size_t i = 0; i < scores.size(); ++i) {
      frames.emplace_back(scores[i], labels[i] == overlap_label);
    }
  }
  if (frames.empty()) throw DataError("calibrate_threshold: empty dev set");
  std::int64_t total_positives = 0;
  for (const auto& [score, positive] : frames) total_positives += positive ? 1 : 0;
  if (total_positives == 0) throw DataError("calibrate_threshold: dev set has no overlap frames");

  std::sort(frames.begin(), frames.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  // Walking candidates from the highest score down, the frames included so
  // far are exactly those with score > candidate, so TP/FP accumulate once.
  double best_qualified_threshold = 0.0, best_qualified_recall = -1.0;
  double best_fallback_threshold = 0.0, best_fallback_precision = -1.0;
  std::int64_t tp = 0, fp = 0;
  size_t i = 0;
  while (i < frames.size()) {
    const double candidate = frames[i].first;
    if (tp + fp > 0) {
      const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
      const double recall = static_cast<double>(tp) / static_cast<double>(total_positives);
      if (precision >= target_precision && recall > best_qualified_recall) {
        best_qualified_recall = recall;
        best_qualified_threshold = candidate;
      }
      if (precision > best_fallback_precision) {
        best_fallback_precision = precision;
        best_fallback_threshold = candidate;
      }
    }
    size_t j = i;
    while (j < frames.size() && frames[j].first == candidate) {
      tp += frames[j].second ? 1 : 0;
      fp += frames[j].second ? 0 : 1;
      ++j;
    }
    i = j;
  }

  if (best_qualified_recall >= 0.0) return best_qualified_threshold;
  if (best_fallback_precision >= 0.0) return best_fallback_threshold;
  return frames.front().first;  // every candidate left zero predictions
}

void write_score_file(const std::string& path, const ScoreTrack& scores) {
  std::ofstream file(path);
  if (!file) throw DataError("cannot open score file for writing: " + path);
  char line[64];
  for (size_t f = 0; f < scores.size(); ++f) {
    std::snprintf(line, sizeof(line), "%zu\t%.17g\n", f, scores[f]);
    file << line;
  }
  if (!file) throw DataError("short write to score file: " + path);
}

ScoreTrack read_score_file(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw DataError("cannot open score file: " + path);
  ScoreTrack scores;
  std::string line;
  size_t line_number = 0;
  while (std::getline(file, line)) {
    ++line_number;
    if (line.empty()) continue;
    std::istringstream iss(line);
    size_t index;
    double value;
    if (!(iss >> index >> value)) {
      throw DataError("malformed score line " + std::to_string(line_number) + " in " + path);
    }
    if (index != scores.size()) {
      throw DataError("non-sequential frame index at line " + std::to_string(line_number) +
                      " in " + path);
    }
    if (value < -1e-12 || value > 1.0 + 1e-12) {
      throw DataError("score outside [0,1] at line " + std::to_string(line_number) + " in " + path);
    }
    scores.push_back(std::clamp(value, 0.0, 1.0));
  }
  return scores;
}

}  // namespace osd
