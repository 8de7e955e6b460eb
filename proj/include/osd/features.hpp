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

#ifndef OSD_FEATURES_HPP
#define OSD_FEATURES_HPP

#include <cstdint>
#include <vector>

#include "osd/wav.hpp"

namespace osd {

// T x F matrix of log-mel energies, row-major, at 100 frames/second.
struct MelSpectrogram {
  int num_frames = 0;
  int num_bins = 0;
  std::vector<double> frames;  // num_frames * num_bins

  double& at(int t, int b) { return frames[static_cast<size_t>(t) * num_bins + b]; }
  double at(int t, int b) const { return frames[static_cast<size_t>(t) * num_bins + b]; }
  const double* row(int t) const { return frames.data() + static_cast<size_t>(t) * num_bins; }
};

struct MelConfig {
  int sample_rate = 16000;
  int window_samples = 400;  // 25 ms
  int shift_samples = 160;   // 10 ms
  int fft_size = 512;
  int num_bins = 128;
  double preemph_coeff = 0.97;
  double log_floor = 1e-10;
};

// y[0] = x[0]; y[n] = x[n] - coeff * x[n-1]. coeff must lie in [0, 1).
Waveform pre_emphasis(const Waveform& w, double coeff = 0.97);

// Canonical frame count of a waveform of num_samples samples under the
// 10 ms framing grid: round(num_samples / shift), half away from zero.
// Label tracks and feature matrices both use this count; log_mel pads its
// raw STFT frames (which number 1 + floor((len - window) / shift)) up to it
// by repeating the final frame.
int frame_count(std::int64_t num_samples, int shift_samples = 160);

// Log-mel feature extraction. Per-frame pipeline: pre-emphasis, Hamming
// window, 512-point magnitude spectrum, 128-bin triangular mel filterbank
// (mel(f) = 2595*log10(1 + f/700), 0 Hz to Nyquist), natural log of
// (energy + floor). Requires w.sample_rate == cfg.sample_rate and at least
// one full window of samples (DataError otherwise).
MelSpectrogram log_mel(const Waveform& w, const MelConfig& cfg = MelConfig{});

// Subtracts each column's mean (per-utterance mean normalization).
MelSpectrogram mean_normalize(const MelSpectrogram& m);

}  // namespace osd

#endif  // OSD_FEATURES_HPP
