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

#include "osd/resample.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace osd {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;
constexpr int kTapsPerPhase = 64;
constexpr double kKaiserBeta = 8.0;
// Kernel table resolution: samples per unit of kernel argument. Linear
// interpolation between entries keeps the evaluation cheap.
constexpr int kTableResolution = 128;

// Modified Bessel function of the first kind, order zero (series expansion).
double bessel_i0(double x) {
  double sum = 1.0;
  double term = 1.0;
  const double half_x = x / 2.0;
  for (int k = 1; k < 40; ++k) {
    term *= (half_x / k) * (half_x / k);
    sum += term;
    if (term < 1e-16 * sum) break;
  }
  return sum;
}

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  return std::sin(kPi * x) / (kPi * x);
}

// Tabulated half-kernel: k(tau) for tau in [0, half_width], where
// k(tau) = cutoff * sinc(cutoff * tau) * kaiser(tau / half_width).
struct Kernel {
  double half_width;  // in input samples
  std::vector<double> table;

  Kernel(double cutoff, double half_width_in) : half_width(half_width_in) {
    const int n = static_cast<int>(half_width * kTableResolution) + 2;
    table.resize(n);
    const double i0_beta = bessel_i0(kKaiserBeta);
    for (int i = 0; i < n; ++i) {
      const double tau = static_cast<double>(i) / kTableResolution;
      if (tau > half_width) {
        table[i] = 0.0;
        continue;
      }
      const double r = tau / half_width;
      const double kaiser = bessel_i0(kKaiserBeta * std::sqrt(1.0 - r * r)) / i0_beta;
      table[i] = cutoff * sinc(cutoff * tau) * kaiser;
    }
  }

  double eval(double tau) const {
    tau = std::abs(tau);
    if (tau >= half_width) return 0.0;
    const double pos = tau * kTableResolution;
    const int idx = static_cast<int>(pos);
    const double frac = pos - idx;
    return table[idx] * (1.0 - frac) + table[idx + 1] * frac;
  }
};

}  // namespace

Waveform resample(const Waveform& w, int target_rate) {
  if (target_rate <= 0) {
    throw std::invalid_argument("resample: target rate must be positive");
  }
  if (target_rate == w.sample_rate) {
    return w;
  }

  const double ratio = static_cast<double>(target_rate) / w.sample_rate;
  // The anti-aliasing cutoff is the lower of the two Nyquist frequencies,
  // expressed in cycles per input sample; when downsampling the kernel is
  // widened so it still spans kTapsPerPhase output-rate taps.
  const double cutoff = std::min(1.0, ratio);
  const double half_width = (kTapsPerPhase / 2.0) / cutoff;
  const Kernel kernel(cutoff, half_width);

  const std::int64_t in_len = static_cast<std::int64_t>(w.samples.size());
  const std::int64_t out_len = std::llround(static_cast<double>(in_len) * ratio);

  Waveform out;
  out.sample_rate = target_rate;
  out.samples.assign(static_cast<size_t>(out_len), 0.0);

  for (std::int64_t n = 0; n < out_len; ++n) {
    const double center = static_cast<double>(n) / ratio;
    const std::int64_t k_lo = static_cast<std::int64_t>(std::ceil(center - half_width));
    const std::int64_t k_hi = static_cast<std::int64_t>(std::floor(center + half_width));
    double acc = 0.0;
    double weight_sum = 0.0;
    for (std::int64_t k = k_lo; k <= k_hi; ++k) {
      const double weight = kernel.eval(static_cast<double>(k) - center);
      weight_sum += weight;
      if (k >= 0 && k < in_len) {
        acc += w.samples[static_cast<size_t>(k)] * weight;
      }
    }
    // Normalizing by the full kernel weight makes DC pass through exactly
    // away from the edges; samples beyond the ends count as zeros.
    out.samples[static_cast<size_t>(n)] = (weight_sum != 0.0) ? acc / weight_sum : 0.0;
  }
  return out;
}

}  // namespace osd
