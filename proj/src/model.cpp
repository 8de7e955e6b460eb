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

#include <cmath>
#include <stdexcept>

#include "osd/errors.hpp"
#include "osd/model.hpp"

namespace osd {

namespace {

constexpr double kLeakySlope = 0.01;

int se_hidden(int channels) { return std::max(1, channels / 16); }

void fill_uniform(Tensor& t, double limit, Rng& rng) {
  for (double& value : t.v) value = rng.uniform(-limit, limit);
}

double glorot_limit(int fan_in, int fan_out) {
  return std::sqrt(6.0 / (static_cast<double>(fan_in) + static_cast<double>(fan_out)));
}

}  // namespace

void ModelConfig::validate() const {
  if (seq_len <= 0 || mel_bins <= 0) throw ConfigError("model: seq_len and mel_bins must be positive");
  const int pool_t = pools[0][0] * pools[1][0] * pools[2][0];
  const int pool_f = pools[0][1] * pools[1][1] * pools[2][1];
  if (pool_t != 6) throw ConfigError("model: pool time extents must multiply to 6");
  if (pool_f != 4) throw ConfigError("model: pool mel extents must multiply to 4");
  int t = seq_len, f = mel_bins;
  for (int b = 0; b < 3; ++b) {
    if (pools[b][0] <= 0 || pools[b][1] <= 0) throw ConfigError("model: pool extents must be positive");
    if (t % pools[b][0] != 0 || f % pools[b][1] != 0) {
      throw ConfigError("model: pooling does not divide the sequence evenly at block " +
                        std::to_string(b));
    }
    t /= pools[b][0];
    f /= pools[b][1];
  }
  for (int c : conv_channels) {
    if (c <= 0) throw ConfigError("model: conv channels must be positive");
  }
  if (gru_hidden <= 0) throw ConfigError("model: gru_hidden must be positive");
  if (gru_layers < 1) throw ConfigError("model: gru_layers must be >= 1");
  if (head_hidden <= 0) throw ConfigError("model: head_hidden must be positive");
  if (num_classes < 2) throw ConfigError("model: num_classes must be >= 2");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("model: dropout must lie in [0, 1)");
}

ParamSet make_param_set(const ModelConfig& cfg) {
  ParamSet p;
  p.blocks.resize(3);
  int cin = 1;
  for (int b = 0; b < 3; ++b) {
    const int ch = cfg.conv_channels[b];
    const int h = se_hidden(ch);
    ConvBlockParams& blk = p.blocks[b];
    blk.conv1_w = Tensor({3, 3, cin, ch});
    blk.conv1_b = Tensor({ch});
    blk.bn1_gamma = Tensor({ch});
    blk.bn1_beta = Tensor({ch});
    blk.conv2_w = Tensor({3, 3, ch, ch});
    blk.conv2_b = Tensor({ch});
    blk.bn2_gamma = Tensor({ch});
    blk.bn2_beta = Tensor({ch});
    blk.se_w1 = Tensor({h, ch});
    blk.se_w2 = Tensor({ch, h});
    cin = ch;
  }
  p.grus.resize(cfg.gru_layers);
  const int hidden = cfg.gru_hidden;
  int in_dim = cfg.conv_channels[2];
  for (int g = 0; g < cfg.gru_layers; ++g) {
    BiGruParams& gru = p.grus[g];
    for (Tensor* w : {&gru.w_ih_f, &gru.w_ih_b}) *w = Tensor({3 * hidden, in_dim});
    for (Tensor* w : {&gru.w_hh_f, &gru.w_hh_b}) *w = Tensor({3 * hidden, hidden});
    for (Tensor* b : {&gru.b_ih_f, &gru.b_hh_f, &gru.b_ih_b, &gru.b_hh_b}) *b = Tensor({3 * hidden});
    in_dim = 2 * hidden;
  }
  p.head.fc1_w = Tensor({cfg.head_hidden, in_dim});
  p.head.fc1_b = Tensor({cfg.head_hidden});
  p.head.fc2_w = Tensor({cfg.num_classes, cfg.head_hidden});
  p.head.fc2_b = Tensor({cfg.num_classes});
  return p;
}

CrnnModel::CrnnModel(const ModelConfig& config) : cfg_(config) {
  cfg_.validate();
  params_ = make_param_set(cfg_);
  bn_stats_.resize(6);
}

void CrnnModel::init_parameters(std::uint64_t seed) {
  Rng rng(seed);
  int cin = 1;
  for (int b = 0; b < 3; ++b) {
    const int ch = cfg_.conv_channels[b];
    const int h = se_hidden(ch);
    ConvBlockParams& blk = params_.blocks[b];
    fill_uniform(blk.conv1_w, glorot_limit(9 * cin, 9 * ch), rng);
    blk.conv1_b.fill(0.0);
    blk.bn1_gamma.fill(1.0);
    blk.bn1_beta.fill(0.0);
    fill_uniform(blk.conv2_w, glorot_limit(9 * ch, 9 * ch), rng);
    blk.conv2_b.fill(0.0);
    blk.bn2_gamma.fill(1.0);
    blk.bn2_beta.fill(0.0);
    fill_uniform(blk.se_w1, glorot_limit(ch, h), rng);
    fill_uniform(blk.se_w2, glorot_limit(h, ch), rng);
    cin = ch;
  }
  const double gru_limit = 1.0 / std::sqrt(static_cast<double>(cfg_.gru_hidden));
  for (BiGruParams& gru : params_.grus) {
    fill_uniform(gru.w_ih_f, gru_limit, rng);
    fill_uniform(gru.w_hh_f, gru_limit, rng);
    gru.b_ih_f.fill(0.0);
    gru.b_hh_f.fill(0.0);
    fill_uniform(gru.w_ih_b, gru_limit, rng);
    fill_uniform(gru.w_hh_b, gru_limit, rng);
    gru.b_ih_b.fill(0.0);
    gru.b_hh_b.fill(0.0);
  }
  fill_uniform(params_.head.fc1_w, glorot_limit(params_.head.fc1_w.dim(1), cfg_.head_hidden), rng);
  params_.head.fc1_b.fill(0.0);
  fill_uniform(params_.head.fc2_w, glorot_limit(cfg_.head_hidden, cfg_.num_classes), rng);
  params_.head.fc2_b.fill(0.0);
  for (nn::BatchNormRunningStats& stats : bn_stats_) {
    stats.mean.clear();
    stats.var.clear();
    stats.num_updates = 0;
  }
}

std::vector<Tensor> CrnnModel::forward_batch(const std::vector<Tensor>& mels, nn::Mode mode,
                                             Rng* dropout_rng, std::vector<ForwardCache>* caches) {
  if (mels.empty()) throw std::invalid_argument("forward: batch must not be empty");
  for (const Tensor& mel : mels) {
    if (mel.rank() != 2 || mel.dim(0) != cfg_.seq_len || mel.dim(1) != cfg_.mel_bins) {
      throw std::invalid_argument("forward: input must be [seq_len, mel_bins]");
    }
  }
  const bool use_dropout = (mode == nn::Mode::kTrain && cfg_.dropout > 0.0);
  if (use_dropout && dropout_rng == nullptr) {
    throw std::invalid_argument("forward: train mode with dropout requires an rng");
  }
  const size_t batch = mels.size();
  if (caches != nullptr) {
    caches->assign(batch, ForwardCache{});
    for (ForwardCache& cache : *caches) {
      cache.blocks.assign(3, BlockCache{});
      cache.gru_caches.assign(static_cast<size_t>(cfg_.gru_layers), nn::BiGruCache{});
      cache.gru_outs.assign(static_cast<size_t>(cfg_.gru_layers), Tensor{});
    }
  }

  // CNN stage in lockstep across the batch so the BN statistics pool over
  // every sample; everything after the last pool is sample-local.
  std::vector<Tensor> xs;
  xs.reserve(batch);
  for (const Tensor& mel : mels) {
    xs.push_back(Tensor({cfg_.seq_len, cfg_.mel_bins, 1}, mel.v));
  }
  std::vector<nn::BatchNormCache> bn_caches;
  for (int b = 0; b < 3; ++b) {
    const ConvBlockParams& p = params_.blocks[b];
    for (size_t s = 0; s < batch; ++s) {
      if (caches != nullptr) (*caches)[s].blocks[b].x_in = xs[s];
      xs[s] = nn::conv2d_forward(xs[s], p.conv1_w, p.conv1_b);
    }
    xs = nn::batchnorm_forward_batch(xs, p.bn1_gamma, p.bn1_beta, mode, &bn_stats_[2 * b], 1e-5,
                                     0.1, caches != nullptr ? &bn_caches : nullptr);
    for (size_t s = 0; s < batch; ++s) {
      if (caches != nullptr) (*caches)[s].blocks[b].bn1 = std::move(bn_caches[s]);
      xs[s] = nn::relu(xs[s]);
      if (caches != nullptr) (*caches)[s].blocks[b].relu1 = xs[s];
      xs[s] = nn::conv2d_forward(xs[s], p.conv2_w, p.conv2_b);
    }
    xs = nn::batchnorm_forward_batch(xs, p.bn2_gamma, p.bn2_beta, mode, &bn_stats_[2 * b + 1],
                                     1e-5, 0.1, caches != nullptr ? &bn_caches : nullptr);
    for (size_t s = 0; s < batch; ++s) {
      BlockCache* bc = (caches != nullptr) ? &(*caches)[s].blocks[b] : nullptr;
      if (bc != nullptr) bc->bn2 = std::move(bn_caches[s]);
      xs[s] = nn::relu(xs[s]);
      if (bc != nullptr) bc->relu2 = xs[s];
      Tensor y = nn::se_block(xs[s], p.se_w1, p.se_w2, bc != nullptr ? &bc->se : nullptr);
      xs[s] = nn::avg_pool2d(y, cfg_.pools[b][0], cfg_.pools[b][1]);
    }
  }

  std::vector<Tensor> logits;
  logits.reserve(batch);
  for (size_t s = 0; s < batch; ++s) {
    ForwardCache* cache = (caches != nullptr) ? &(*caches)[s] : nullptr;
    if (cache != nullptr) cache->cnn_out = xs[s];

    Tensor h = nn::freq_average(xs[s]);
    if (cache != nullptr) cache->gru_in = h;
    for (int g = 0; g < cfg_.gru_layers; ++g) {
      const BiGruParams& gp = params_.grus[g];
      const nn::BiGruWeights w{&gp.w_ih_f, &gp.w_hh_f, &gp.b_ih_f, &gp.b_hh_f,
                               &gp.w_ih_b, &gp.w_hh_b, &gp.b_ih_b, &gp.b_hh_b};
      h = nn::bigru_forward(h, w, cache != nullptr ? &cache->gru_caches[g] : nullptr);
      if (cache != nullptr) cache->gru_outs[g] = h;
    }

    Tensor f1 = nn::linear_forward(h, params_.head.fc1_w, params_.head.fc1_b);
    if (cache != nullptr) cache->fc1_out = f1;
    Tensor dropped;
    if (use_dropout) {
      dropped = nn::dropout(f1, cfg_.dropout, mode, *dropout_rng,
                            cache != nullptr ? &cache->drop_mask : nullptr);
    } else {
      dropped = f1;
      if (cache != nullptr) {
        cache->drop_mask = Tensor(f1.shape);
        cache->drop_mask.fill(1.0);
      }
    }
    if (cache != nullptr) cache->drop_out = dropped;
    Tensor act = nn::leaky_relu(dropped, kLeakySlope);
    if (cache != nullptr) cache->lrelu_out = act;
    logits.push_back(nn::linear_forward(act, params_.head.fc2_w, params_.head.fc2_b));
  }
  return logits;
}

Tensor CrnnModel::forward(const Tensor& mel, nn::Mode mode, Rng* dropout_rng, ForwardCache* cache) {
  std::vector<ForwardCache> caches;
  std::vector<Tensor> logits =
      forward_batch({mel}, mode, dropout_rng, cache != nullptr ? &caches : nullptr);
  if (cache != nullptr) *cache = std::move(caches[0]);
  return std::move(logits[0]);
}

void CrnnModel::backward_batch(const std::vector<ForwardCache>& caches,
                               const std::vector<Tensor>& grad_logits, ParamSet& grads) const {
  if (caches.empty() || caches.size() != grad_logits.size()) {
    throw std::invalid_argument("backward: cache and gradient counts differ");
  }
  const size_t batch = caches.size();
  const HeadParams& hp = params_.head;

  // Head and GRU gradients are sample-local; collect each sample's gradient
  // at the CNN output boundary before walking the blocks back in lockstep.
  std::vector<Tensor> g_pool(batch);
  for (size_t s = 0; s < batch; ++s) {
    const ForwardCache& cache = caches[s];

    Tensor g_lrelu(cache.lrelu_out.shape);
    nn::linear_backward(cache.lrelu_out, hp.fc2_w, grad_logits[s], g_lrelu, grads.head.fc2_w,
                        grads.head.fc2_b);
    Tensor g_drop(cache.drop_out.shape);
    nn::leaky_relu_backward(cache.drop_out, g_lrelu, kLeakySlope, g_drop);
    Tensor g_fc1(cache.fc1_out.shape);
    nn::dropout_backward(cache.drop_mask, g_drop, g_fc1);

    const Tensor& fc1_in = cache.gru_outs.back();
    Tensor g = Tensor(fc1_in.shape);
    nn::linear_backward(fc1_in, hp.fc1_w, g_fc1, g, grads.head.fc1_w, grads.head.fc1_b);

    for (int l = cfg_.gru_layers - 1; l >= 0; --l) {
      const BiGruParams& gp = params_.grus[l];
      BiGruParams& gg = grads.grus[l];
      const nn::BiGruWeights w{&gp.w_ih_f, &gp.w_hh_f, &gp.b_ih_f, &gp.b_hh_f,
                               &gp.w_ih_b, &gp.w_hh_b, &gp.b_ih_b, &gp.b_hh_b};
      const nn::BiGruGrads wg{&gg.w_ih_f, &gg.w_hh_f, &gg.b_ih_f, &gg.b_hh_f,
                              &gg.w_ih_b, &gg.w_hh_b, &gg.b_ih_b, &gg.b_hh_b};
      const Tensor& x_in = (l == 0) ? cache.gru_in : cache.gru_outs[l - 1];
      Tensor gx(x_in.shape);
      nn::bigru_backward(x_in, w, cache.gru_caches[l], g, gx, wg);
      g = std::move(gx);
    }

    Tensor g_cnn(cache.cnn_out.shape);
    nn::freq_average_backward(g, cache.cnn_out.dim(1), g_cnn);
    g_pool[s] = std::move(g_cnn);
  }

  for (int b = 2; b >= 0; --b) {
    const ConvBlockParams& bp = params_.blocks[b];
    ConvBlockParams& bg = grads.blocks[b];

    std::vector<Tensor> g_bn(batch);
    std::vector<const nn::BatchNormCache*> bn_caches(batch);
    for (size_t s = 0; s < batch; ++s) {
      const BlockCache& bc = caches[s].blocks[b];
      Tensor g_se(bc.relu2.shape);
      nn::avg_pool2d_backward(g_pool[s], cfg_.pools[b][0], cfg_.pools[b][1], g_se);
      Tensor g_r2(bc.relu2.shape);
      nn::se_backward(bc.relu2, bp.se_w1, bp.se_w2, bc.se, g_se, g_r2, bg.se_w1, bg.se_w2);
      g_bn[s] = Tensor(bc.relu2.shape);
      nn::relu_backward(bc.relu2, g_r2, g_bn[s]);
      bn_caches[s] = &bc.bn2;
    }
    std::vector<Tensor> g_conv(batch);
    for (size_t s = 0; s < batch; ++s) g_conv[s] = Tensor(caches[s].blocks[b].relu2.shape);
    nn::batchnorm_backward_batch(g_bn, bp.bn2_gamma, bn_caches, g_conv, bg.bn2_gamma,
                                 bg.bn2_beta);
    for (size_t s = 0; s < batch; ++s) {
      const BlockCache& bc = caches[s].blocks[b];
      Tensor g_r1(bc.relu1.shape);
      nn::conv2d_backward(bc.relu1, bp.conv2_w, g_conv[s], g_r1, bg.conv2_w, bg.conv2_b);
      g_bn[s] = Tensor(bc.relu1.shape);
      nn::relu_backward(bc.relu1, g_r1, g_bn[s]);
      bn_caches[s] = &bc.bn1;
      g_conv[s] = Tensor(bc.relu1.shape);
    }
    nn::batchnorm_backward_batch(g_bn, bp.bn1_gamma, bn_caches, g_conv, bg.bn1_gamma,
                                 bg.bn1_beta);
    for (size_t s = 0; s < batch; ++s) {
      const BlockCache& bc = caches[s].blocks[b];
      Tensor g_x(bc.x_in.shape);
      nn::conv2d_backward(bc.x_in, bp.conv1_w, g_conv[s], g_x, bg.conv1_w, bg.conv1_b);
      g_pool[s] = std::move(g_x);
    }
  }
  // g_pool now holds d(loss)/d(input) per sample, which has no consumer.
}

void CrnnModel::backward(const ForwardCache& cache, const Tensor& grad_logits,
                         ParamSet& grads) const {
  backward_batch({cache}, {grad_logits}, grads);
}

double train_step(CrnnModel& model, std::vector<AdamState>& opt_state,
                  const std::vector<Tensor>& batch_mels,
                  const std::vector<FrameLabelTrack>& batch_labels,
                  std::span<const double> class_weights, double lr, Rng& dropout_rng) {
  if (batch_mels.empty()) throw std::invalid_argument("train_step: empty batch");
  if (batch_mels.size() != batch_labels.size()) {
    throw std::invalid_argument("train_step: batch and label counts differ");
  }
  const ModelConfig& cfg = model.config();
  if (class_weights.size() != static_cast<size_t>(cfg.num_classes)) {
    throw std::invalid_argument("train_step: class weight count mismatch");
  }

  for (const FrameLabelTrack& track : batch_labels) {
    if (track.size() != static_cast<size_t>(cfg.seq_len)) {
      throw std::invalid_argument("train_step: label track length must equal seq_len");
    }
  }

  ParamSet grads = make_param_set(cfg);
  std::vector<ForwardCache> caches;
  const std::vector<Tensor> logits = model.forward_batch(batch_mels, nn::Mode::kTrain,
                                                         &dropout_rng, &caches);
  double num = 0.0, den = 0.0;
  std::vector<Tensor> grad_logits;
  grad_logits.reserve(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) {
    const FrameLabelTrack targets = downsample_labels(batch_labels[i]);
    grad_logits.emplace_back(logits[i].shape);
    const nn::CeSums sums =
        nn::softmax_xent_with_grad(logits[i], targets, class_weights, grad_logits.back());
    num += sums.num;
    den += sums.den;
  }
  model.backward_batch(caches, grad_logits, grads);

  const double loss = num / den;
  if (!std::isfinite(loss)) throw NumericError("train_step: loss is not finite");

  // One global 1/den turns the summed per-frame gradients into the gradient
  // of the weighted-mean loss; duplicated samples therefore change nothing.
  const double scale = 1.0 / den;
  std::vector<Tensor*> param_tensors, grad_tensors;
  for_each_param(model.params(), [&](const std::string&, Tensor& t) { param_tensors.push_back(&t); });
  for_each_param(grads, [&](const std::string&, Tensor& t) { grad_tensors.push_back(&t); });
  if (opt_state.empty()) opt_state.resize(param_tensors.size());
  if (opt_state.size() != param_tensors.size()) {
    throw std::invalid_argument("train_step: optimizer state does not match parameter count");
  }
  for (size_t k = 0; k < param_tensors.size(); ++k) {
    for (double& gv : grad_tensors[k]->v) gv *= scale;
    adam_step(std::span<double>(param_tensors[k]->v),
              std::span<const double>(grad_tensors[k]->v), opt_state[k], lr);
  }
  return loss;
}

}  // namespace osd
