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

#include "osd/augment.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

#include "osd/errors.hpp"
#include "osd/features.hpp"
#include "osd/resample.hpp"

namespace osd {

void validate_clip(const LabeledClip& clip) {
  const int want = frame_count(clip.wav.samples.size());
  if (clip.num_frames() != want) {
    throw DataError("clip label track has " + std::to_string(clip.labels.size()) +
                    " frames, framing rule requires " + std::to_string(want));
  }
}

LabeledClip mix_overlap(const LabeledClip& a, const LabeledClip& b, double gain_db) {
  if (a.wav.sample_rate != b.wav.sample_rate) {
    throw DataError("mix_overlap: sample-rate mismatch (" +
                    std::to_string(a.wav.sample_rate) + " vs " +
                    std::to_string(b.wav.sample_rate) + ")");
  }
  for (const LabeledClip* c : {&a, &b}) {
    validate_clip(*c);
    for (std::uint8_t v : c->labels) {
      if (v > 1) throw DataError("mix_overlap: input clip already contains overlap labels");
    }
  }

  const double gain = std::pow(10.0, gain_db / 20.0);
  LabeledClip out;
  out.wav.sample_rate = a.wav.sample_rate;
  out.wav.samples.assign(std::max(a.wav.samples.size(), b.wav.samples.size()), 0.0);
  for (std::size_t i = 0; i < a.wav.samples.size(); ++i) out.wav.samples[i] += a.wav.samples[i];
  for (std::size_t i = 0; i < b.wav.samples.size(); ++i) out.wav.samples[i] += gain * b.wav.samples[i];

  out.labels.assign(std::max(a.labels.size(), b.labels.size()), 0);
  for (std::size_t k = 0; k < out.labels.size(); ++k) {
    const int la = k < a.labels.size() ? a.labels[k] : 0;
    const int lb = k < b.labels.size() ? b.labels[k] : 0;
    out.labels[k] = static_cast<std::uint8_t>(std::min(la + lb, 2));
  }
  out.provenance = Provenance::kAugmented;
  validate_clip(out);
  return out;
}

LabeledClip samplerate_roundtrip_augment(const LabeledClip& clip) {
  if (clip.wav.sample_rate != 16000) {
    throw DataError("samplerate_roundtrip_augment: expected 16 kHz input, got " +
                    std::to_string(clip.wav.sample_rate) + " Hz");
  }
  validate_clip(clip);

  Waveform down = resample(clip.wav, 8000);
  Waveform up = resample(down, 16000);
  up.samples.resize(clip.wav.samples.size(), 0.0);  // exact length restore

  LabeledClip out;
  out.wav = std::move(up);
  out.labels = clip.labels;
  out.provenance = Provenance::kAugmented;
  return out;
}

LabeledClip add_noise(const LabeledClip& clip, double snr_db, Rng& rng) {
  validate_clip(clip);
  if (std::isinf(snr_db) && snr_db > 0) return clip;  // +inf sentinel: no-op
  if (!std::isfinite(snr_db)) throw DataError("add_noise: snr_db must be finite or +inf");

  // Speech power over samples whose frame is labeled speech (label > 0).
  double speech_energy = 0.0;
  std::size_t speech_samples = 0;
  const std::size_t n = clip.wav.samples.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t f = std::min<std::size_t>(i / 160, clip.labels.size() - 1);
    if (clip.labels.empty() || clip.labels[f] == 0) continue;
    speech_energy += clip.wav.samples[i] * clip.wav.samples[i];
    ++speech_samples;
  }
  if (speech_samples == 0 || speech_energy <= 0.0) {
    throw DataError("add_noise: clip has no speech energy, cannot satisfy a finite SNR");
  }
  const double speech_power = speech_energy / static_cast<double>(speech_samples);
  const double noise_power = speech_power / std::pow(10.0, snr_db / 10.0);
  const double sigma = std::sqrt(noise_power);

  LabeledClip out = clip;
  for (std::size_t i = 0; i < n; ++i) out.wav.samples[i] += sigma * rng.gaussian();
  out.provenance = Provenance::kAugmented;
  return out;
}

}  // namespace osd
