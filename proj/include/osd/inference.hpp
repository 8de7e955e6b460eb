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

#ifndef OSD_INFERENCE_HPP
#define OSD_INFERENCE_HPP

#include <string>
#include <utility>
#include <vector>

#include "osd/features.hpp"
#include "osd/labels.hpp"
#include "osd/model.hpp"
#include "osd/segments.hpp"

namespace osd {

// Per-frame overlap scores in [0, 1] at 100 fps.
using ScoreTrack = std::vector<double>;

// Window onsets for a clip of `num_frames` frames: multiples of the shift
// while a full window fits, plus an end-aligned window at T - seq_len when
// the stride does not land there. Clips shorter than one window get the
// single onset 0 (the caller pads).
std::vector<int> window_starts(int num_frames, int seq_len = 150, int shift = 50);

// Number of windows covering each frame under window_starts.
std::vector<int> coverage_counts(int num_frames, int seq_len = 150, int shift = 50);

// Sliding-window posteriors [T, K]: each 150-frame window is scored in eval
// mode, softmaxed, every output frame duplicated 6x back to the input rate,
// accumulated, and divided by the frame's exact coverage count. Clips with
// T < 150 are zero-feature-padded (zeros are the post-normalization neutral
// value) and the result is truncated to T. The mel input must already be
// mean-normalized.
Tensor sliding_posteriors(CrnnModel& model, const MelSpectrogram& mel);

// The last class column of sliding_posteriors (the overlap node).
ScoreTrack sliding_score(CrnnModel& model, const MelSpectrogram& mel);

// Maximal runs of frames with score > threshold, as half-open segments on
// the 10 ms grid. Runs shorter than min_duration_s are discarded.
std::vector<TimedSegment> scores_to_segments(const ScoreTrack& scores, double threshold,
                                             double min_duration_s = 0.0);

// Sweeps every distinct score value as a candidate threshold (predicate:
// score > threshold). Among candidates reaching frame precision >= target,
// returns the one with maximal recall (ties -> higher threshold); if none
// reaches the target, returns the candidate of maximal defined precision
// (ties -> higher threshold); if precision is undefined everywhere, returns
// the highest candidate. Overlap frames are those labeled `overlap_label`.
// Throws DataError when the dev set is empty or holds no overlap frame.
double calibrate_threshold(const std::vector<std::pair<ScoreTrack, FrameLabelTrack>>& scored_dev,
                           double target_precision = 0.9, std::uint8_t overlap_label = 2);

// Score dump: newline-delimited "frame_index<TAB>score" with full precision.
void write_score_file(const std::string& path, const ScoreTrack& scores);
ScoreTrack read_score_file(const std::string& path);

}  // namespace osd

#endif  // OSD_INFERENCE_HPP
