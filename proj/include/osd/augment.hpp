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

#ifndef OSD_AUGMENT_HPP
#define OSD_AUGMENT_HPP

#include "osd/labels.hpp"
#include "osd/rng.hpp"
#include "osd/wav.hpp"

namespace osd {

enum class Provenance { kReal, kSynthetic, kAugmented };

// A waveform with aligned 100 fps labels. The label track length always
// equals frame_count(wav.samples.size()).
struct LabeledClip {
  Waveform wav;
  FrameLabelTrack labels;
  Provenance provenance = Provenance::kSynthetic;

  int num_frames() const { return static_cast<int>(labels.size()); }
};

// Throws DataError when the label length violates the framing rule.
void validate_clip(const LabeledClip& clip);

// Mixes two single-speaker clips: the shorter is zero-padded, b is scaled by
// 10^(gain_db/20), and labels combine as min(a + b, 2) per frame. Throws
// DataError on sample-rate mismatch or when either clip already contains
// overlap labels.
LabeledClip mix_overlap(const LabeledClip& a, const LabeledClip& b, double gain_db);

// 16 kHz -> 8 kHz -> 16 kHz resampling round-trip; output is cropped or
// zero-padded back to the exact input length and labels are untouched.
// Throws DataError for non-16 kHz input.
LabeledClip samplerate_roundtrip_augment(const LabeledClip& clip);

// Adds white noise at the requested SNR, measured against the mean power of
// samples inside speech-labeled (label > 0) frames. snr_db = +infinity is the
// identity. Throws DataError when the clip has no speech energy and a finite
// SNR is requested.
LabeledClip add_noise(const LabeledClip& clip, double snr_db, Rng& rng);

}  // namespace osd

#endif  // OSD_AUGMENT_HPP
