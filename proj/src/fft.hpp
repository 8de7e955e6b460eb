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

#ifndef OSD_SRC_FFT_HPP
#define OSD_SRC_FFT_HPP

#include <complex>
#include <vector>

namespace osd {

// In-place iterative radix-2 FFT. data.size() must be a power of two.
// inverse=true applies the conjugate transform and the 1/N scale.
void fft(std::vector<std::complex<double>>& data, bool inverse = false);

}  // namespace osd

#endif  // OSD_SRC_FFT_HPP
