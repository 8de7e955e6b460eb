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
#include <fstream>
#include <stdexcept>

#include "osd/errors.hpp"
#include "osd/features.hpp"
#include "osd/labels.hpp"

namespace osd {

FrameLabelTrack labels_from_segments(const std::vector<SpeakerSegment>& segments, int num_frames) {
  if (num_frames < 0) throw std::invalid_argument("labels_from_segments: negative frame count");
  for (const SpeakerSegment& seg : segments) {
    if (seg.offset_s < seg.onset_s) {
      throw std::invalid_argument("labels_from_segments: segment offset before onset");
    }
  }

  FrameLabelTrack labels(static_cast<size_t>(num_frames), 0);
  std::vector<const std::string*> active;
  for (int k = 0; k < num_frames; ++k) {
    const double center = (k + 0.5) * kFramePeriodS;
    active.clear();
    for (const SpeakerSegment& seg : segments) {
      if (seg.onset_s <= center && center < seg.offset_s) {
        bool seen = false;
        for (const std::string* name : active) {
          if (*name == seg.speaker) {
            seen = true;
            break;
          }
        }
        if (!seen) active.push_back(&seg.speaker);
      }
    }
    labels[k] = static_cast<std::uint8_t>(std::min<size_t>(active.size(), 2));
  }
  return labels;
}

FrameLabelTrack labels_from_segments(const std::vector<SpeakerSegment>& segments,
                                     double duration_s) {
  if (duration_s < 0.0) throw std::invalid_argument("labels_from_segments: negative duration");
  for (const SpeakerSegment& seg : segments) {
    if (seg.onset_s < -1e-9 || seg.offset_s > duration_s + 1e-9) {
      throw std::invalid_argument("labels_from_segments: segment outside [0, duration]");
    }
  }
  const long long samples = std::llround(duration_s * MelConfig{}.sample_rate);
  return labels_from_segments(segments, frame_count(samples));
}

FrameLabelTrack downsample_labels(const FrameLabelTrack& labels) {
  if (labels.size() % 6 != 0) {
    throw std::invalid_argument("downsample_labels: length not divisible by 6");
  }
  FrameLabelTrack out(labels.size() / 6);
  for (size_t g = 0; g < out.size(); ++g) {
    int counts[3] = {0, 0, 0};
    for (size_t j = 0; j < 6; ++j) {
      const std::uint8_t value = labels[g * 6 + j];
      if (value > 2) throw std::invalid_argument("downsample_labels: label value out of range");
      counts[value] += 1;
    }
    int best = 0;
    for (int c = 1; c < 3; ++c) {
      if (counts[c] >= counts[best]) best = c;  // >= resolves ties upward
    }
    out[g] = static_cast<std::uint8_t>(best);
  }
  return out;
}

void write_label_file(const std::string& path, const FrameLabelTrack& labels) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot open label file for writing: " + path);
  file.write(reinterpret_cast<const char*>(labels.data()),
             static_cast<std::streamsize>(labels.size()));
  if (!file) throw DataError("short write to label file: " + path);
}

FrameLabelTrack read_label_file(const std::string& path) {
  std::ifstream file(path, std::ios::binary | std::ios::ate);
  if (!file) throw DataError("cannot open label file: " + path);
  const std::streamsize size = file.tellg();
  file.seekg(0);
  FrameLabelTrack labels(static_cast<size_t>(size));
  if (size > 0) file.read(reinterpret_cast<char*>(labels.data()), size);
  if (!file) throw DataError("short read from label file: " + path);
  for (std::uint8_t value : labels) {
    if (value > 2) throw DataError("label file contains a value outside {0,1,2}: " + path);
  }
  return labels;
}

}  // namespace osd
