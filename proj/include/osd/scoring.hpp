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

#ifndef OSD_SCORING_HPP
#define OSD_SCORING_HPP

#include <optional>
#include <vector>

#include "osd/diarization.hpp"
#include "osd/inference.hpp"
#include "osd/labels.hpp"
#include "osd/tensor.hpp"

namespace osd {

// nullopt marks an undefined ratio (no predicted positives for precision,
// no reference positives for recall), deliberately distinct from 0.
struct PrecisionRecall {
  std::optional<double> precision;
  std::optional<double> recall;
};

// Frame-level overlap detection metrics. Predicted positives are frames with
// score > threshold; reference positives carry `overlap_label`. Throws
// std::invalid_argument on length mismatch.
PrecisionRecall frame_precision_recall(const ScoreTrack& scores, double threshold,
                                       const FrameLabelTrack& ref,
                                       std::uint8_t overlap_label = 2);

// Same metrics from an explicit prediction mask.
PrecisionRecall frame_precision_recall(const std::vector<bool>& predicted,
                                       const FrameLabelTrack& ref,
                                       std::uint8_t overlap_label = 2);

// Fraction of frames whose posterior argmax equals the label.
double frame_accuracy(const Tensor& posteriors, const FrameLabelTrack& labels);

// All components as fractions of total reference speaker time.
struct DerBreakdown {
  double der = 0.0;
  double false_alarm = 0.0;
  double miss = 0.0;
  double confusion = 0.0;
  double total_ref_speech_s = 0.0;
};

// One-to-one assignment maximizing total matched seconds; mapping[r] is the
// hypothesis column for reference row r, or -1 when unmatched. Entries must
// be nonnegative.
std::vector<int> optimal_speaker_mapping(const std::vector<std::vector<double>>& overlap_matrix);

// Exact interval-sweep DER with per-file optimal speaker mapping. A frame
// with two reference speakers contributes two speaker-seconds. With a
// positive collar, regions within +-collar of any reference segment boundary
// are excluded from scoring (and from the mapping statistics). Throws
// DataError when total reference speech is zero.
DerBreakdown compute_der(const std::vector<RttmRecord>& ref, const std::vector<RttmRecord>& hyp,
                         double collar_s = 0.0);

}  // namespace osd

#endif  // OSD_SCORING_HPP
