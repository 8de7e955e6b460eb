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

#ifndef OSD_OPTIM_HPP
#define OSD_OPTIM_HPP

#include <span>
#include <vector>

namespace osd {

// First and second moment buffers for one flat parameter vector.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
};

// One Adam update with bias correction. The state is sized lazily on the
// first call; afterwards a size mismatch throws std::invalid_argument.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

// Cosine annealing from lr_max at step 0 to lr_min at step total_steps - 1.
// Requires total_steps >= 1 and 0 <= step < total_steps.
double cosine_lr(long step, long total_steps, double lr_max, double lr_min = 0.0);

}  // namespace osd

#endif  // OSD_OPTIM_HPP
