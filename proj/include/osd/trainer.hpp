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

#ifndef OSD_TRAINER_HPP
#define OSD_TRAINER_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "osd/features.hpp"
#include "osd/labels.hpp"
#include "osd/model.hpp"

namespace osd {

struct TrainOptions {
  ModelConfig model;
  std::string manifest_path;
  std::string out_dir;
  int batch_size = 32;
  int epochs = 4;
  int steps_per_epoch = 0;  // 0 derives ceil(n_clips / batch_size)
  double lr_max = 1e-3;
  double lr_min = 0.0;
  std::uint64_t seed = 1;

  void validate() const;
};

// A feature-space clip ready for cropping. Labels are already remapped when
// the model is the two-class ablation (2 -> 1, else 0).
struct LoadedClip {
  MelSpectrogram feat;  // mean-normalized log-mel
  FrameLabelTrack labels;
};

struct Corpus {
  std::vector<LoadedClip> clips;
  std::vector<std::int64_t> class_counts;  // input-frame counts per class
};

// Reads every manifest entry, extracts normalized log-mel features, and
// validates the label track against the framing rule.
Corpus load_corpus(const std::string& manifest_path, const ModelConfig& cfg);

struct TrainResult {
  std::vector<double> epoch_mean_losses;
  std::vector<double> step_losses;  // concatenated over epochs
  std::string final_checkpoint;     // <out_dir>/model.ckpt
};

// Runs the full loop: Adam + cosine schedule, one loss-log line per step to
// both `log` and <out_dir>/loss_log.txt, checkpoint per epoch. The batch
// schedule and dropout streams restart identically each epoch, so lr = 0
// produces a log whose per-step losses repeat across epochs.
TrainResult train_model(const TrainOptions& opts, std::ostream& log);

}  // namespace osd

#endif  // OSD_TRAINER_HPP
