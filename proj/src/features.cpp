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

#include "osd/features.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "fft.hpp"
#include "osd/errors.hpp"

namespace osd {

namespace {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

// Triangular filterbank as a dense (num_bins x num_fft_bins) weight matrix.
// Filter k peaks at mel center k+1 of a uniform grid over [0, mel(nyquist)].
std::vector<double> build_filterbank(const MelConfig& cfg) {
  const int num_fft_bins = cfg.fft_size / 2 + 1;
  const double nyquist = cfg.sample_rate / 2.0;
  const double mel_max = hz_to_mel(nyquist);

  std::vector<double> centers_mel(cfg.num_bins + 2);
  for (int i = 0; i < cfg.num_bins + 2; ++i) {
    centers_mel[i] = mel_max * i / (cfg.num_bins + 1);
  }

  std::vector<double> fb(static_cast<size_t>(cfg.num_bins) * num_fft_bins, 0.0);
  for (int bin = 0; bin < num_fft_bins; ++bin) {
    const double freq = static_cast<double>(bin) * cfg.sample_rate / cfg.fft_size;
    const double mel = hz_to_mel(freq);
    for (int k = 0; k < cfg.num_bins; ++k) {
      const double left = centers_mel[k];
      const double center = centers_mel[k + 1];
      const double right = centers_mel[k + 2];
      double weight = 0.0;
      if (mel > left && mel < right) {
        weight = (mel <= center) ? (mel - left) / (center - left)
                                 : (right - mel) / (right - center);
      }
      fb[static_cast<size_t>(k) * num_fft_bins + bin] = weight;
    }
  }
  return fb;
}

}  // namespace

Waveform pre_emphasis(const Waveform& w, double coeff) {
  if (coeff < 0.0 || coeff >= 1.0) {
    throw std::invalid_argument("pre_emphasis coefficient must lie in [0, 1)");
  }
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples.resize(w.samples.size());
  if (!w.samples.empty()) {
    out.samples[0] = w.samples[0];
    for (size_t n = 1; n < w.samples.size(); ++n) {
      out.samples[n] = w.samples[n] - coeff * w.samples[n - 1];
    }
  }
  return out;
}

int frame_count(std::int64_t num_samples, int shift_samples) {
  return static_cast<int>((num_samples + shift_samples / 2) / shift_samples);
}

MelSpectrogram log_mel(const Waveform& w, const MelConfig& cfg) {
  if (w.sample_rate != cfg.sample_rate) {
    throw DataError("log_mel expects " + std::to_string(cfg.sample_rate) + " Hz input, got " +
                    std::to_string(w.sample_rate) + " Hz");
  }
  const std::int64_t len = static_cast<std::int64_t>(w.samples.size());
  if (len < cfg.window_samples) {
    throw DataError("waveform shorter than one analysis window (" + std::to_string(len) + " < " +
                    std::to_string(cfg.window_samples) + " samples)");
  }

  const int raw_frames = 1 + static_cast<int>((len - cfg.window_samples) / cfg.shift_samples);
  const int out_frames = frame_count(len, cfg.shift_samples);
  const int num_fft_bins = cfg.fft_size / 2 + 1;

  std::vector<double> window(cfg.window_samples);
  for (int n = 0; n < cfg.window_samples; ++n) {
    window[n] = 0.54 - 0.46 * std::cos(2.0 * 3.14159265358979323846 * n / (cfg.window_samples - 1));
  }
  const std::vector<double> fb = build_filterbank(cfg);

  MelSpectrogram m;
  m.num_bins = cfg.num_bins;
  m.num_frames = out_frames;
  m.frames.assign(static_cast<size_t>(out_frames) * cfg.num_bins, 0.0);

  std::vector<std::complex<double>> spec(cfg.fft_size);
  std::vector<double> mag(num_fft_bins);
  for (int t = 0; t < raw_frames && t < out_frames; ++t) {
    const double* x = w.samples.data() + static_cast<size_t>(t) * cfg.shift_samples;

    // Pre-emphasis on the frame slice, then window, then zero-pad to fft size.
    spec.assign(cfg.fft_size, {0.0, 0.0});
    spec[0] = x[0] * window[0];
    for (int n = 1; n < cfg.window_samples; ++n) {
      spec[n] = (x[n] - cfg.preemph_coeff * x[n - 1]) * window[n];
    }
    fft(spec);
    for (int b = 0; b < num_fft_bins; ++b) mag[b] = std::abs(spec[b]);

    double* row = m.frames.data() + static_cast<size_t>(t) * cfg.num_bins;
    for (int k = 0; k < cfg.num_bins; ++k) {
      const double* weights = fb.data() + static_cast<size_t>(k) * num_fft_bins;
      double energy = 0.0;
      for (int b = 0; b < num_fft_bins; ++b) energy += weights[b] * mag[b];
      row[k] = std::log(energy + cfg.log_floor);
    }
  }

  // Pad to the canonical frame count by repeating the last raw frame.
  const int copied = std::min(raw_frames, out_frames);
  for (int t = copied; t < out_frames; ++t) {
    for (int k = 0; k < cfg.num_bins; ++k) {
      m.at(t, k) = m.at(copied - 1, k);
    }
  }
  return m;
}

MelSpectrogram mean_normalize(const MelSpectrogram& m) {
  MelSpectrogram out = m;
  if (m.num_frames == 0) return out;
  for (int k = 0; k < m.num_bins; ++k) {
    double mean = 0.0;
    for (int t = 0; t < m.num_frames; ++t) mean += m.at(t, k);
    mean /= m.num_frames;
    for (int t = 0; t < m.num_frames; ++t) out.at(t, k) = m.at(t, k) - mean;
  }
  return out;
}

}  // namespace osd
