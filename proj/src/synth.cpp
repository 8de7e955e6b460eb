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

#include "osd/synth.hpp"

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>

#include "osd/errors.hpp"
#include "osd/features.hpp"
#include "fft.hpp"

namespace osd {
namespace {

constexpr int kSampleRate = 16000;
constexpr double kPi = 3.14159265358979323846;

// Speaker identities are disjoint-ish spectral bands. Everything sits below
// 3.6 kHz so the 8 kHz round-trip augmentation cannot erase a speaker.
constexpr double kBands[8][2] = {
    {200, 500},   {350, 750},   {550, 1000},  {800, 1400},
    {1100, 1800}, {1500, 2300}, {2000, 2900}, {2600, 3600},
};

struct Interval {
  double onset_s;
  double offset_s;
};

// Alternating talk/pause schedule. Draw order is fixed for determinism.
std::vector<Interval> make_schedule(Rng& rng, double dur_s, double first_pause_hi,
                                    double talk_lo, double talk_hi, double pause_lo,
                                    double pause_hi) {
  std::vector<Interval> segs;
  double t = rng.uniform(0.0, first_pause_hi);
  while (t < dur_s) {
    const double end = std::min(t + rng.uniform(talk_lo, talk_hi), dur_s);
    if (end - t >= 0.15) segs.push_back({t, end});
    t = end + rng.uniform(pause_lo, pause_hi);
  }
  return segs;
}

// Band-limited Gaussian noise via FFT masking; keeps only [f_lo, f_hi].
std::vector<double> band_noise(Rng& rng, int len, double f_lo, double f_hi) {
  std::size_t m = 1;
  while (m < static_cast<std::size_t>(len)) m <<= 1;
  std::vector<std::complex<double>> spec(m);
  for (std::size_t i = 0; i < static_cast<std::size_t>(len); ++i) {
    spec[i] = {rng.gaussian(), 0.0};
  }
  fft(spec);
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t kk = std::min(k, m - k);  // symmetric mask keeps x real
    const double freq = static_cast<double>(kk) * kSampleRate / static_cast<double>(m);
    if (freq < f_lo || freq > f_hi) spec[k] = 0.0;
  }
  fft(spec, true);
  std::vector<double> out(len);
  for (int i = 0; i < len; ++i) out[i] = spec[i].real();
  return out;
}

void render_burst(Rng& rng, const double band[2], int s0, int s1, std::vector<double>& wave) {
  const int len = s1 - s0;
  std::vector<double> burst = band_noise(rng, len, band[0], band[1]);

  double energy = 0.0;
  for (double v : burst) energy += v * v;
  const double rms = std::sqrt(energy / std::max(len, 1));
  const double amp = rng.uniform(0.06, 0.15);
  const double scale = rms > 0 ? amp / rms : 0.0;

  const double fm = rng.uniform(2.0, 8.0);          // syllabic-rate AM
  const double phase = rng.uniform(0.0, 2.0 * kPi);
  const int fade = std::min(160, len / 2);          // 10 ms raised-cosine edges
  for (int i = 0; i < len; ++i) {
    double v = burst[i] * scale;
    v *= 0.6 + 0.4 * std::sin(2.0 * kPi * fm * i / kSampleRate + phase);
    if (i < fade) v *= 0.5 - 0.5 * std::cos(kPi * i / fade);
    if (len - 1 - i < fade) v *= 0.5 - 0.5 * std::cos(kPi * (len - 1 - i) / fade);
    wave[s0 + i] += v;
  }
}

LabeledClip render_speaker(Rng& rng, const double band[2], const std::vector<Interval>& segs,
                           int num_samples, int num_frames) {
  LabeledClip clip;
  clip.wav.sample_rate = kSampleRate;
  clip.wav.samples.assign(num_samples, 0.0);
  for (const Interval& seg : segs) {
    const int s0 = static_cast<int>(std::llround(seg.onset_s * kSampleRate));
    const int s1 = std::min(static_cast<int>(std::llround(seg.offset_s * kSampleRate)), num_samples);
    if (s1 > s0) render_burst(rng, band, s0, s1, clip.wav.samples);
  }

  std::vector<SpeakerSegment> lab;
  lab.reserve(segs.size());
  for (const Interval& seg : segs) lab.push_back({seg.onset_s, seg.offset_s, "spk"});
  clip.labels = labels_from_segments(lab, num_frames);
  clip.provenance = Provenance::kSynthetic;
  return clip;
}

}  // namespace

void SynthConfig::validate() const {
  if (n_clips < 0) throw ConfigError("synth: n_clips must be non-negative");
  if (!(duration_s > 0.5)) throw ConfigError("synth: duration_s must exceed 0.5 s");
  if (roundtrip_prob < 0 || roundtrip_prob > 1 || noise_prob < 0 || noise_prob > 1) {
    throw ConfigError("synth: probabilities must lie in [0, 1]");
  }
  if (!(snr_lo_db <= snr_hi_db)) throw ConfigError("synth: snr_lo_db must not exceed snr_hi_db");
  if (!(gain_range_db >= 0)) throw ConfigError("synth: gain_range_db must be non-negative");
}

LabeledClip synth_clip(Rng& rng, const SynthConfig& cfg) {
  const int num_samples = static_cast<int>(std::llround(cfg.duration_s * kSampleRate));
  const int num_frames = frame_count(num_samples);

  // Two identities at circular index distance >= 2: their bands never touch,
  // so a single wide band is not confusable with two overlapped narrow ones.
  const int ia = rng.uniform_int(8);
  const int ib = (ia + 2 + rng.uniform_int(5)) % 8;

  // Speaker A talks densely, speaker B sparsely; together they hit silence,
  // single-speaker, and overlap frames with comfortable margins over 5%.
  const std::vector<Interval> segs_a = make_schedule(rng, cfg.duration_s, 0.8, 0.8, 2.2, 0.4, 1.2);
  const std::vector<Interval> segs_b = make_schedule(rng, cfg.duration_s, 2.0, 0.5, 1.6, 0.8, 2.8);

  const LabeledClip a = render_speaker(rng, kBands[ia], segs_a, num_samples, num_frames);
  const LabeledClip b = render_speaker(rng, kBands[ib], segs_b, num_samples, num_frames);

  LabeledClip clip = mix_overlap(a, b, rng.uniform(-cfg.gain_range_db, cfg.gain_range_db));
  if (rng.uniform() < cfg.roundtrip_prob) clip = samplerate_roundtrip_augment(clip);
  if (rng.uniform() < cfg.noise_prob) {
    clip = add_noise(clip, rng.uniform(cfg.snr_lo_db, cfg.snr_hi_db), rng);
  }
  clip.provenance = Provenance::kSynthetic;
  return clip;
}

std::vector<LabeledClip> synth_corpus(std::uint64_t seed, const SynthConfig& cfg) {
  cfg.validate();
  Rng master(seed);
  std::vector<LabeledClip> clips;
  clips.reserve(cfg.n_clips);
  for (int i = 0; i < cfg.n_clips; ++i) {
    Rng clip_rng(master.derive(static_cast<std::uint64_t>(i) + 1));
    clips.push_back(synth_clip(clip_rng, cfg));
  }
  return clips;
}

std::vector<LabeledClip> synth_corpus(std::uint64_t seed, int n_clips, double duration_s) {
  SynthConfig cfg;
  cfg.n_clips = n_clips;
  cfg.duration_s = duration_s;
  return synth_corpus(seed, cfg);
}

std::vector<double> class_fractions(const std::vector<LabeledClip>& clips, int num_classes) {
  std::vector<std::int64_t> counts(num_classes, 0);
  std::int64_t total = 0;
  for (const LabeledClip& c : clips) {
    for (std::uint8_t v : c.labels) {
      if (v >= num_classes) throw DataError("class_fractions: label " + std::to_string(v) +
                                            " out of range");
      ++counts[v];
      ++total;
    }
  }
  std::vector<double> frac(num_classes, 0.0);
  if (total == 0) return frac;
  for (int c = 0; c < num_classes; ++c) {
    frac[c] = static_cast<double>(counts[c]) / static_cast<double>(total);
  }
  return frac;
}

}  // namespace osd
