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

#ifndef OSD_SYNTH_HPP
#define OSD_SYNTH_HPP

#include <cstdint>
#include <vector>

#include "osd/augment.hpp"

namespace osd {

struct SynthConfig {
  int n_clips = 220;
  double duration_s = 10.0;
  // Probability that a clip passes through the 8 kHz round-trip.
  double roundtrip_prob = 0.3;
  // Probability of additive noise, with SNR drawn from [snr_lo_db, snr_hi_db].
  double noise_prob = 0.5;
  double snr_lo_db = 10.0;
  double snr_hi_db = 20.0;
  // Second-speaker mix gain is drawn from [-gain_range_db, +gain_range_db].
  double gain_range_db = 5.0;

  void validate() const;
};

// Generates one two-speaker clip from an already-derived per-clip stream.
LabeledClip synth_clip(Rng& rng, const SynthConfig& cfg);

// Deterministic corpus: clip i consumes only the stream derive(seed, i + 1),
// so the output is reproducible for a fixed (seed, cfg) regardless of order.
std::vector<LabeledClip> synth_corpus(std::uint64_t seed, const SynthConfig& cfg);
std::vector<LabeledClip> synth_corpus(std::uint64_t seed, int n_clips, double duration_s);

// Fraction of frames per class over a set of clips, indexed by label value.
std::vector<double> class_fractions(const std::vector<LabeledClip>& clips, int num_classes = 3);

}  // namespace osd

#endif  // OSD_SYNTH_HPP
