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

#ifndef OSD_MODEL_HPP
#define OSD_MODEL_HPP

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "osd/labels.hpp"
#include "osd/nn.hpp"
#include "osd/optim.hpp"
#include "osd/rng.hpp"
#include "osd/tensor.hpp"

namespace osd {

// Architecture hyperparameters. The pooling schedule compresses time by 6
// (150 -> 25) and frequency by 4 (128 -> 32); validate() enforces this and
// the stage-by-stage divisibility it implies.
struct ModelConfig {
  int seq_len = 150;
  int mel_bins = 128;
  std::array<int, 3> conv_channels = {128, 128, 128};
  std::array<std::array<int, 2>, 3> pools = {{{2, 1}, {3, 2}, {1, 2}}};
  int gru_hidden = 256;
  int gru_layers = 2;
  int head_hidden = 256;
  int num_classes = 3;
  double dropout = 0.5;

  void validate() const;  // throws ConfigError

  int out_frames() const { return seq_len / (pools[0][0] * pools[1][0] * pools[2][0]); }
  int out_bins() const { return mel_bins / (pools[0][1] * pools[1][1] * pools[2][1]); }
  // Input frames represented by one output frame (6 under the default pools).
  int frames_per_output() const { return pools[0][0] * pools[1][0] * pools[2][0]; }

  bool operator==(const ModelConfig& other) const = default;
};

struct ConvBlockParams {
  Tensor conv1_w, conv1_b, bn1_gamma, bn1_beta;
  Tensor conv2_w, conv2_b, bn2_gamma, bn2_beta;
  Tensor se_w1, se_w2;
};

struct BiGruParams {
  Tensor w_ih_f, w_hh_f, b_ih_f, b_hh_f;
  Tensor w_ih_b, w_hh_b, b_ih_b, b_hh_b;
};

struct HeadParams {
  Tensor fc1_w, fc1_b, fc2_w, fc2_b;
};

// Every learnable tensor of the CRNN. Gradients use the same structure with
// identical shapes so forward/backward code can mirror field for field.
struct ParamSet {
  std::vector<ConvBlockParams> blocks;
  std::vector<BiGruParams> grus;
  HeadParams head;
};

// Zero-filled parameter set with shapes derived from the config.
ParamSet make_param_set(const ModelConfig& cfg);

// Visits every learnable tensor in a fixed order with a stable name. The
// order defines parameter indexing for the optimizer and the checkpoint.
template <class ParamSetT, class Fn>
void for_each_param(ParamSetT& p, Fn&& fn) {
  for (size_t b = 0; b < p.blocks.size(); ++b) {
    const std::string prefix = "block" + std::to_string(b) + ".";
    auto& blk = p.blocks[b];
    fn(prefix + "conv1.w", blk.conv1_w);
    fn(prefix + "conv1.b", blk.conv1_b);
    fn(prefix + "bn1.gamma", blk.bn1_gamma);
    fn(prefix + "bn1.beta", blk.bn1_beta);
    fn(prefix + "conv2.w", blk.conv2_w);
    fn(prefix + "conv2.b", blk.conv2_b);
    fn(prefix + "bn2.gamma", blk.bn2_gamma);
    fn(prefix + "bn2.beta", blk.bn2_beta);
    fn(prefix + "se.w1", blk.se_w1);
    fn(prefix + "se.w2", blk.se_w2);
  }
  for (size_t g = 0; g < p.grus.size(); ++g) {
    const std::string prefix = "gru" + std::to_string(g) + ".";
    auto& gru = p.grus[g];
    fn(prefix + "fwd.w_ih", gru.w_ih_f);
    fn(prefix + "fwd.w_hh", gru.w_hh_f);
    fn(prefix + "fwd.b_ih", gru.b_ih_f);
    fn(prefix + "fwd.b_hh", gru.b_hh_f);
    fn(prefix + "bwd.w_ih", gru.w_ih_b);
    fn(prefix + "bwd.w_hh", gru.w_hh_b);
    fn(prefix + "bwd.b_ih", gru.b_ih_b);
    fn(prefix + "bwd.b_hh", gru.b_hh_b);
  }
  fn(std::string("head.fc1.w"), p.head.fc1_w);
  fn(std::string("head.fc1.b"), p.head.fc1_b);
  fn(std::string("head.fc2.w"), p.head.fc2_w);
  fn(std::string("head.fc2.b"), p.head.fc2_b);
}

struct BlockCache {
  Tensor x_in;  // block input [T, F, Cin]
  nn::BatchNormCache bn1, bn2;
  Tensor relu1, relu2;  // post-ReLU activations
  nn::SeCache se;
};

// Intermediates of one sample's train-mode forward pass, laid out so every
// backward function finds exactly the inputs it caches nothing else for.
struct ForwardCache {
  std::vector<BlockCache> blocks;
  Tensor cnn_out;  // pooled final block output [T', F', C]
  Tensor gru_in;   // [T', C] after the frequency average
  std::vector<nn::BiGruCache> gru_caches;
  std::vector<Tensor> gru_outs;  // [T', 2H] per layer
  Tensor fc1_out;
  Tensor drop_mask, drop_out;
  Tensor lrelu_out;
};

class CrnnModel {
 public:
  // Validates the config and allocates zero parameters and BN statistics.
  explicit CrnnModel(const ModelConfig& config);

  // Deterministic initialization: Glorot-uniform conv/SE/linear weights,
  // uniform(-1/sqrt(H), 1/sqrt(H)) GRU weights, zero biases, BN gamma 1.
  void init_parameters(std::uint64_t seed);

  // mels: one [seq_len, mel_bins] mean-normalized tensor per sample. Returns
  // logits [T', K] per sample. Train mode normalizes with batch statistics
  // pooled across the whole minibatch, updates the BN running estimates once,
  // and applies dropout (rng required when dropout > 0, consumed in sample
  // order). Eval mode uses running statistics and is a pure function of the
  // input.
  std::vector<Tensor> forward_batch(const std::vector<Tensor>& mels, nn::Mode mode,
                                    Rng* dropout_rng = nullptr,
                                    std::vector<ForwardCache>* caches = nullptr);

  // Single-sample convenience wrapper over forward_batch.
  Tensor forward(const Tensor& mel, nn::Mode mode, Rng* dropout_rng = nullptr,
                 ForwardCache* cache = nullptr);

  // Accumulates d(loss)/d(param) into `grads` given d(loss)/d(logits) for the
  // batch the caches came from. BN gradients couple the samples, so the whole
  // batch must be walked back together.
  void backward_batch(const std::vector<ForwardCache>& caches,
                      const std::vector<Tensor>& grad_logits, ParamSet& grads) const;

  // Single-sample convenience wrapper over backward_batch.
  void backward(const ForwardCache& cache, const Tensor& grad_logits, ParamSet& grads) const;

  const ModelConfig& config() const { return cfg_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }
  std::vector<nn::BatchNormRunningStats>& bn_stats() { return bn_stats_; }
  const std::vector<nn::BatchNormRunningStats>& bn_stats() const { return bn_stats_; }

 private:
  ModelConfig cfg_;
  ParamSet params_;
  std::vector<nn::BatchNormRunningStats> bn_stats_;  // index 2*block + {0,1}
};

// One optimization step over a batch: batched forward with pooled BN
// statistics, gradients scaled by the summed per-frame class weight (so the
// loss is a weighted mean over every output frame in the batch), one Adam
// update per parameter tensor. Returns the pre-update loss. Labels are given
// per input frame (seq_len entries) and are majority-downsampled internally.
// Throws std::invalid_argument for an empty batch and NumericError when the
// loss is not finite.
double train_step(CrnnModel& model, std::vector<AdamState>& opt_state,
                  const std::vector<Tensor>& batch_mels,
                  const std::vector<FrameLabelTrack>& batch_labels,
                  std::span<const double> class_weights, double lr, Rng& dropout_rng);

}  // namespace osd

#endif  // OSD_MODEL_HPP
