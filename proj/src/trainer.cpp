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

#include "osd/trainer.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "osd/checkpoint.hpp"
#include "osd/errors.hpp"
#include "osd/manifest.hpp"
#include "osd/nn.hpp"
#include "osd/optim.hpp"
#include "osd/rng.hpp"
#include "osd/wav.hpp"

namespace osd {
namespace {

// Stream ids for deriving independent RNGs from the run seed. The crop and
// dropout streams restart each epoch so the batch schedule is a pure function
// of the seed; with lr = 0 the loss log then repeats identically per epoch.
constexpr std::uint64_t kInitStream = 0x01;
constexpr std::uint64_t kCropStream = 0x02;
constexpr std::uint64_t kDropoutStream = 0x03;

Tensor crop_window(const LoadedClip& clip, int start, int seq_len, int mel_bins,
                   FrameLabelTrack* labels_out) {
  Tensor mel({seq_len, mel_bins});
  labels_out->assign(seq_len, 0);
  const int frames = clip.feat.num_frames;
  for (int t = 0; t < seq_len; ++t) {
    const int src = start + t;
    if (src >= frames) break;  // zero padding past the clip end, label 0
    std::memcpy(&mel.at(t, 0), clip.feat.row(src), sizeof(double) * mel_bins);
    (*labels_out)[t] = clip.labels[src];
  }
  return mel;
}

}  // namespace

void TrainOptions::validate() const {
  model.validate();
  if (manifest_path.empty()) throw ConfigError("train: manifest path is required");
  if (out_dir.empty()) throw ConfigError("train: output directory is required");
  if (batch_size <= 0) throw ConfigError("train: batch_size must be positive");
  if (epochs <= 0) throw ConfigError("train: epochs must be positive");
  if (steps_per_epoch < 0) throw ConfigError("train: steps_per_epoch must be non-negative");
  if (!(lr_max >= 0) || !(lr_min >= 0) || lr_min > lr_max) {
    throw ConfigError("train: learning rates must satisfy 0 <= lr_min <= lr_max");
  }
}

Corpus load_corpus(const std::string& manifest_path, const ModelConfig& cfg) {
  const std::vector<ManifestEntry> entries = read_manifest(manifest_path);
  if (entries.empty()) throw DataError("empty manifest: " + manifest_path);

  MelConfig mel_cfg;
  mel_cfg.num_bins = cfg.mel_bins;

  Corpus corpus;
  corpus.clips.reserve(entries.size());
  corpus.class_counts.assign(cfg.num_classes, 0);
  for (const ManifestEntry& e : entries) {
    const Waveform w = read_wav(e.wav_path);
    if (w.sample_rate != mel_cfg.sample_rate) {
      throw DataError(e.wav_path + ": expected " + std::to_string(mel_cfg.sample_rate) +
                      " Hz, got " + std::to_string(w.sample_rate));
    }
    LoadedClip clip;
    clip.feat = mean_normalize(log_mel(w, mel_cfg));
    clip.labels = read_label_file(e.label_path);
    if (static_cast<int>(clip.labels.size()) != clip.feat.num_frames) {
      throw DataError(e.label_path + ": " + std::to_string(clip.labels.size()) +
                      " labels for " + std::to_string(clip.feat.num_frames) + " frames");
    }
    if (cfg.num_classes == 2) {
      for (std::uint8_t& v : clip.labels) v = (v == 2) ? 1 : 0;
    }
    for (std::uint8_t v : clip.labels) {
      if (v >= cfg.num_classes) {
        throw DataError(e.label_path + ": label " + std::to_string(v) + " out of range for " +
                        std::to_string(cfg.num_classes) + " classes");
      }
      ++corpus.class_counts[v];
    }
    corpus.clips.push_back(std::move(clip));
  }
  return corpus;
}

TrainResult train_model(const TrainOptions& opts, std::ostream& log) {
  opts.validate();
  const Corpus corpus = load_corpus(opts.manifest_path, opts.model);
  for (int c = 0; c < opts.model.num_classes; ++c) {
    if (corpus.class_counts[c] == 0) {
      throw DataError("training corpus has no frames of class " + std::to_string(c));
    }
  }
  const std::vector<double> weights = nn::class_weights_from_counts(corpus.class_counts);

  std::filesystem::create_directories(opts.out_dir);
  std::ofstream loss_log(opts.out_dir + "/loss_log.txt");
  if (!loss_log) throw DataError("cannot open loss log in " + opts.out_dir);

  CrnnModel model(opts.model);
  model.init_parameters(Rng(opts.seed).derive(kInitStream).seed());
  std::vector<AdamState> opt_state;

  const int n_clips = static_cast<int>(corpus.clips.size());
  const int steps = opts.steps_per_epoch > 0
                        ? opts.steps_per_epoch
                        : (n_clips + opts.batch_size - 1) / opts.batch_size;
  const long total_steps = static_cast<long>(steps) * opts.epochs;

  TrainResult result;
  char line[160];
  for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
    Rng crop_rng(Rng(opts.seed).derive(kCropStream));
    Rng dropout_rng(Rng(opts.seed).derive(kDropoutStream));
    double epoch_sum = 0.0;
    for (int step = 1; step <= steps; ++step) {
      const long global = static_cast<long>(epoch - 1) * steps + (step - 1);
      const double lr = cosine_lr(global, total_steps, opts.lr_max, opts.lr_min);

      std::vector<Tensor> mels;
      std::vector<FrameLabelTrack> labels(opts.batch_size);
      mels.reserve(opts.batch_size);
      for (int j = 0; j < opts.batch_size; ++j) {
        const LoadedClip& clip = corpus.clips[crop_rng.uniform_int(n_clips)];
        const int slack = clip.feat.num_frames - opts.model.seq_len;
        const int start = slack > 0 ? crop_rng.uniform_int(slack + 1) : 0;
        mels.push_back(crop_window(clip, start, opts.model.seq_len, opts.model.mel_bins,
                                   &labels[j]));
      }

      double loss;
      try {
        loss = train_step(model, opt_state, mels, labels, weights, lr, dropout_rng);
      } catch (const NumericError& err) {
        throw NumericError(std::string(err.what()) + " at epoch " + std::to_string(epoch) +
                           " step " + std::to_string(step));
      }
      epoch_sum += loss;
      result.step_losses.push_back(loss);

      std::snprintf(line, sizeof(line), "epoch %d step %d lr %.17g loss %.17g", epoch, step,
                    lr, loss);
      log << line << '\n';
      loss_log << line << '\n';
    }
    const double epoch_mean = epoch_sum / steps;
    result.epoch_mean_losses.push_back(epoch_mean);
    std::snprintf(line, sizeof(line), "epoch %d mean_loss %.17g", epoch, epoch_mean);
    log << line << '\n';
    loss_log << line << '\n';

    std::snprintf(line, sizeof(line), "%s/epoch_%03d.ckpt", opts.out_dir.c_str(), epoch);
    save_checkpoint(model, nullptr, line);
  }

  result.final_checkpoint = opts.out_dir + "/model.ckpt";
  save_checkpoint(model, &opt_state, result.final_checkpoint);
  if (!loss_log) throw DataError("failed writing loss log in " + opts.out_dir);
  return result;
}

}  // namespace osd
