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

#ifndef OSD_WAV_HPP
#define OSD_WAV_HPP

#include <string>
#include <vector>

namespace osd {

// Mono amplitude sequence, nominal range [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 16000;

  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// Reads a PCM 16-bit mono or stereo WAV file. Stereo channels are averaged
// to mono; amplitudes are scaled by 1/32768. Throws DataError with distinct
// messages for a missing file, a malformed header, and an unsupported
// encoding.
Waveform read_wav(const std::string& path);

// Writes a PCM 16-bit mono little-endian WAV file. Amplitudes are clipped to
// [-1, 1] before quantization; a read_wav round trip recovers every sample
// within one 16-bit quantization step. Throws DataError on an unwritable
// path.
void write_wav(const Waveform& w, const std::string& path);

}  // namespace osd

#endif  // OSD_WAV_HPP
