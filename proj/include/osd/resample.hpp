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

#ifndef OSD_RESAMPLE_HPP
#define OSD_RESAMPLE_HPP

#include "osd/wav.hpp"

namespace osd {

// Band-limited sample-rate conversion with a Kaiser-windowed sinc kernel,
// 64 taps per output phase. Output length = round(len * target / source).
// Samples outside the input are treated as zeros, so a short region at each
// edge is attenuated. target_rate == source_rate returns the input verbatim.
// Throws std::invalid_argument for a non-positive target rate.
Waveform resample(const Waveform& w, int target_rate);

}  // namespace osd

#endif  // OSD_RESAMPLE_HPP
