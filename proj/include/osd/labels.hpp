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

#ifndef OSD_LABELS_HPP
#define OSD_LABELS_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace osd {

// Frame labels at 100 fps: 0 = non-speech, 1 = one speaker, 2 = overlap.
using FrameLabelTrack = std::vector<std::uint8_t>;

inline constexpr double kFrameRateHz = 100.0;
inline constexpr double kFramePeriodS = 0.01;

struct SpeakerSegment {
  double onset_s = 0.0;
  double offset_s = 0.0;
  std::string speaker;
};

// Rasterizes segments onto `num_frames` 10 ms frames. A frame is active for a
// speaker when its center (k + 0.5) * 10 ms lies in [onset, offset); the label
// is min(#distinct active speakers, 2). Throws std::invalid_argument when a
// segment has offset < onset.
FrameLabelTrack labels_from_segments(const std::vector<SpeakerSegment>& segments, int num_frames);

// Convenience wrapper: frame count taken from the framing rule applied to a
// 16 kHz waveform of the given duration. Segments must lie in [0, duration].
FrameLabelTrack labels_from_segments(const std::vector<SpeakerSegment>& segments,
                                     double duration_s);

// Majority vote per 6-frame group; ties resolve toward the larger class index
// so overlap wins over single speech. Length must be divisible by 6.
FrameLabelTrack downsample_labels(const FrameLabelTrack& labels);

// Binary label file: one u8 per 10 ms frame. Read validates values <= 2.
void write_label_file(const std::string& path, const FrameLabelTrack& labels);
FrameLabelTrack read_label_file(const std::string& path);

}  // namespace osd

#endif  // OSD_LABELS_HPP
