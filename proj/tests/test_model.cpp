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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "osd/checkpoint.hpp"
#include "osd/errors.hpp"
#include "osd/labels.hpp"
#include "osd/model.hpp"
#include "osd/nn.hpp"
#include "osd/optim.hpp"
#include "osd/rng.hpp"
#include "test_util.hpp"

using namespace osd;
using osd::test::fill_random;
using osd::test::TempDir;

namespace {

// Small config with the mandatory 6x time and 4x frequency reductions.
ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.seq_len = 30;
  cfg.mel_bins = 16;
  cfg.conv_channels = {4, 4, 4};
  cfg.gru_hidden = 8;
  cfg.gru_layers = 2;
  cfg.head_hidden = 8;
  cfg.num_classes = 3;
  cfg.dropout = 0.0;
  return cfg;
}

std::vector<double> flatten_params(const ParamSet& p) {
  std::vector<double> out;
  for_each_param(p, [&](const std::string&, const Tensor& t) {
    out.insert(out.end(), t.v.begin(), t.v.end());
  });
  return out;
}

}  // namespace

TEST_CASE("config validation rejects broken shapes") {
  CHECK_NOTHROW(ModelConfig{}.validate());
  CHECK_NOTHROW(tiny_config().validate());

  ModelConfig bad = tiny_config();
  bad.seq_len = 31;  // 31 not divisible by the 2*3*1 time pooling
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = tiny_config();
  bad.mel_bins = 18;  // 18/1 ok, 18/2 = 9, 9/2 fails
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = tiny_config();
  bad.num_classes = 1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = tiny_config();
  bad.dropout = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = tiny_config();
  bad.gru_layers = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  CHECK(ModelConfig{}.out_frames() == 25);
  CHECK(ModelConfig{}.out_bins() == 32);
  CHECK(ModelConfig{}.frames_per_output() == 6);
}

TEST_CASE("initialization is deterministic in the seed") {
  CrnnModel a(tiny_config()), b(tiny_config()), c(tiny_config());
  a.init_parameters(7);
  b.init_parameters(7);
  c.init_parameters(8);
  CHECK(flatten_params(a.params()) == flatten_params(b.params()));
  CHECK(flatten_params(a.params()) != flatten_params(c.params()));
}

TEST_CASE("zeroed head emits exactly uniform posteriors") {
  CrnnModel model(tiny_config());
  model.init_parameters(3);
  model.params().head.fc2_w.fill(0.0);
  model.params().head.fc2_b.fill(0.0);

  Tensor mel({30, 16});
  Rng rng(4);
  fill_random(mel, rng);
  const Tensor logits = model.forward(mel, nn::Mode::kTrain);
  const Tensor probs = nn::softmax(logits);
  for (double v : logits.v) CHECK(v == 0.0);
  for (double v : probs.v) CHECK(v == 1.0 / 3.0);
}

TEST_CASE("default config reproduces the documented shape chain") {
  CrnnModel model((ModelConfig()));
  model.init_parameters(5);
  Tensor mel({150, 128});
  Rng rng(6);
  fill_random(mel, rng);

  ForwardCache cache;
  Rng drop(7);
  const Tensor logits = model.forward(mel, nn::Mode::kTrain, &drop, &cache);
  CHECK(cache.cnn_out.shape == std::vector<int>{25, 32, 128});
  CHECK(cache.gru_in.shape == std::vector<int>{25, 128});
  CHECK(cache.gru_outs.back().shape == std::vector<int>{25, 512});
  CHECK(logits.shape == std::vector<int>{25, 3});
  CHECK(model.config().frames_per_output() == 6);
  CHECK(25 * model.config().frames_per_output() == 150);
}

TEST_CASE("downsample_labels takes the majority with ties upward") {
  CHECK(downsample_labels({1, 1, 1, 2, 2, 2}) == FrameLabelTrack{2});
  CHECK(downsample_labels({0, 0, 0, 0, 0, 2}) == FrameLabelTrack{0});
  CHECK(downsample_labels({0, 0, 1, 1, 2, 2}) == FrameLabelTrack{2});
  CHECK(downsample_labels({0, 0, 0, 1, 1, 2}) == FrameLabelTrack{0});  // 3 beats 2
  CHECK(downsample_labels({1, 1, 1, 1, 0, 0, 2, 2, 2, 0, 0, 2}) == FrameLabelTrack{1, 2});
  CHECK_THROWS_AS(downsample_labels({0, 1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(downsample_labels({0, 0, 0, 0, 0, 3}), std::invalid_argument);
}

TEST_CASE("eval forward is a pure function after stats exist") {
  CrnnModel model(tiny_config());
  model.init_parameters(9);
  Rng rng(10);
  Tensor mel({30, 16});
  fill_random(mel, rng);

  // Eval before any training forward must fail: no running stats yet.
  CHECK_THROWS_AS(model.forward(mel, nn::Mode::kEval), std::invalid_argument);

  model.forward(mel, nn::Mode::kTrain);
  const Tensor y1 = model.forward(mel, nn::Mode::kEval);
  const Tensor y2 = model.forward(mel, nn::Mode::kEval);
  CHECK(y1.v == y2.v);
}

TEST_CASE("model backward matches finite differences through the whole chain") {
  const ModelConfig cfg = tiny_config();
  CrnnModel model(cfg);
  model.init_parameters(11);
  Rng rng(12);
  // Two samples so the finite difference also crosses the pooled BN
  // statistics that couple the batch.
  std::vector<Tensor> mels(2, Tensor({cfg.seq_len, cfg.mel_bins}));
  for (auto& m : mels) fill_random(m, rng);
  std::vector<FrameLabelTrack> labels(2, FrameLabelTrack(cfg.out_frames()));
  for (auto& track : labels) {
    for (auto& l : track) l = static_cast<std::uint8_t>(rng.uniform_int(3));
  }
  const std::vector<double> weights = {1.25, 0.5, 5.0};

  const auto loss_value = [&] {
    const std::vector<Tensor> logits = model.forward_batch(mels, nn::Mode::kTrain);
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
      Tensor g({cfg.out_frames(), cfg.num_classes});
      const nn::CeSums s = nn::softmax_xent_with_grad(logits[i], labels[i], weights, g);
      num += s.num;
      den += s.den;
    }
    return num / den;
  };

  std::vector<ForwardCache> caches;
  const std::vector<Tensor> logits = model.forward_batch(mels, nn::Mode::kTrain, nullptr, &caches);
  std::vector<Tensor> grad_logits;
  double den = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    grad_logits.emplace_back(std::vector<int>{cfg.out_frames(), cfg.num_classes});
    const nn::CeSums s =
        nn::softmax_xent_with_grad(logits[i], labels[i], weights, grad_logits.back());
    den += s.den;
  }
  for (Tensor& g : grad_logits) {
    for (double& v : g.v) v /= den;
  }
  ParamSet grads = make_param_set(cfg);
  model.backward_batch(caches, grad_logits, grads);

  double worst = 0.0;
  for_each_param(model.params(), [&](const std::string& name, Tensor& param) {
    const Tensor* grad = nullptr;
    for_each_param(grads, [&](const std::string& gname, const Tensor& gt) {
      if (gname == name) grad = &gt;
    });
    REQUIRE(grad != nullptr);
    for (int probe = 0; probe < 6; ++probe) {
      const int c = static_cast<int>(rng.uniform_int(param.size()));
      const double orig = param.v[c];
      // Smaller step than the op-level checks: the whole chain crosses many
      // relu kinks and a narrower stencil keeps the probes on one side.
      const double h = 1e-6 * std::max(1.0, std::abs(orig));
      param.v[c] = orig + h;
      const double fp = loss_value();
      param.v[c] = orig - h;
      const double fm = loss_value();
      param.v[c] = orig;
      const double numeric = (fp - fm) / (2.0 * h);
      const double a = grad->v[c];
      worst = std::max(worst, std::abs(a - numeric) /
                                  std::max({1.0, std::abs(a), std::abs(numeric)}));
    }
  });
  CHECK(worst <= 1e-4);
}

TEST_CASE("train_step with lr 0 leaves parameters untouched") {
  const ModelConfig cfg = tiny_config();
  CrnnModel model(cfg);
  model.init_parameters(13);
  const std::vector<double> before = flatten_params(model.params());

  Rng rng(14);
  std::vector<Tensor> mels(2, Tensor({cfg.seq_len, cfg.mel_bins}));
  std::vector<FrameLabelTrack> labels(2, FrameLabelTrack(cfg.seq_len));
  for (auto& m : mels) fill_random(m, rng);
  for (auto& track : labels) {
    for (auto& l : track) l = static_cast<std::uint8_t>(rng.uniform_int(3));
  }
  std::vector<AdamState> opt;
  Rng drop(15);
  const double loss =
      train_step(model, opt, mels, labels, std::vector<double>{1.0, 1.0, 1.0}, 0.0, drop);
  CHECK(std::isfinite(loss));
  CHECK(flatten_params(model.params()) == before);
}

TEST_CASE("duplicated samples do not change the update") {
  const ModelConfig cfg = tiny_config();
  Rng rng(16);
  Tensor mel({cfg.seq_len, cfg.mel_bins});
  fill_random(mel, rng);
  FrameLabelTrack track(cfg.seq_len);
  for (auto& l : track) l = static_cast<std::uint8_t>(rng.uniform_int(3));
  const std::vector<double> weights = {1.25, 0.5, 5.0};

  CrnnModel once(cfg), twice(cfg);
  once.init_parameters(17);
  twice.init_parameters(17);
  std::vector<AdamState> opt1, opt2;
  Rng d1(18), d2(18);

  const double loss1 = train_step(once, opt1, {mel}, {track}, weights, 1e-3, d1);
  const double loss2 = train_step(twice, opt2, {mel, mel}, {track, track}, weights, 1e-3, d2);
  CHECK(loss1 == loss2);  // exact: (2n)/(2d) == n/d bitwise
  // Gradients are rescaled by 1/2 per copy; only the accumulation order differs,
  // so the post-step parameters agree to rounding noise.
  const std::vector<double> p1 = flatten_params(once.params());
  const std::vector<double> p2 = flatten_params(twice.params());
  REQUIRE(p1.size() == p2.size());
  double max_err = 0.0;
  for (std::size_t i = 0; i < p1.size(); ++i) {
    max_err = std::max(max_err, osd::test::rel_err(p1[i], p2[i]));
  }
  CHECK(max_err <= 1e-10);
}

TEST_CASE("200 steps on a fixed batch overfit to a tenth of the start loss") {
  const ModelConfig cfg = tiny_config();
  CrnnModel model(cfg);
  model.init_parameters(19);

  Rng rng(20);
  std::vector<Tensor> mels(2, Tensor({cfg.seq_len, cfg.mel_bins}));
  for (auto& m : mels) fill_random(m, rng);
  std::vector<FrameLabelTrack> labels(2, FrameLabelTrack(cfg.seq_len));
  for (auto& track : labels) {
    for (auto& l : track) l = static_cast<std::uint8_t>(rng.uniform_int(3));
  }
  const std::vector<double> weights = {1.0, 1.0, 1.0};

  std::vector<AdamState> opt;
  Rng drop(21);
  double first = 0.0, last = 0.0;
  for (int step = 0; step < 200; ++step) {
    last = train_step(model, opt, mels, labels, weights, 3e-3, drop);
    if (step == 0) first = last;
  }
  CHECK(last < 0.1 * first);
}

TEST_CASE("train_step validates its batch") {
  const ModelConfig cfg = tiny_config();
  CrnnModel model(cfg);
  model.init_parameters(22);
  std::vector<AdamState> opt;
  Rng drop(23);
  const std::vector<double> w3 = {1.0, 1.0, 1.0};
  CHECK_THROWS_AS(train_step(model, opt, {}, {}, w3, 1e-3, drop), std::invalid_argument);

  Tensor bad({10, 16});
  FrameLabelTrack track(10, 0);
  CHECK_THROWS_AS(train_step(model, opt, {bad}, {track}, w3, 1e-3, drop),
                  std::invalid_argument);
}

TEST_CASE("checkpoint round trip is bit exact") {
  const ModelConfig cfg = tiny_config();
  CrnnModel model(cfg);
  model.init_parameters(24);
  Rng rng(25);
  Tensor mel({cfg.seq_len, cfg.mel_bins});
  fill_random(mel, rng);
  model.forward(mel, nn::Mode::kTrain);  // populate BN running stats

  // Give the optimizer state distinctive content.
  std::vector<AdamState> opt;
  std::vector<FrameLabelTrack> labels(1, FrameLabelTrack(cfg.seq_len, 1));
  Rng drop(26);
  train_step(model, opt, {mel}, labels, std::vector<double>{1.0, 1.0, 1.0}, 1e-3, drop);

  TempDir dir("ckpt");
  const std::string path = dir.file("model.ckpt");
  save_checkpoint(model, &opt, path);

  std::vector<AdamState> opt2;
  CrnnModel loaded = load_checkpoint(path, &opt2);
  CHECK(loaded.config() == cfg);
  CHECK(flatten_params(loaded.params()) == flatten_params(model.params()));
  REQUIRE(opt2.size() == opt.size());
  for (size_t i = 0; i < opt.size(); ++i) {
    CHECK(opt2[i].step == opt[i].step);
    CHECK(opt2[i].m == opt[i].m);
    CHECK(opt2[i].v == opt[i].v);
  }

  const Tensor y1 = model.forward(mel, nn::Mode::kEval);
  const Tensor y2 = loaded.forward(mel, nn::Mode::kEval);
  CHECK(y1.v == y2.v);  // bit-identical eval logits
}

TEST_CASE("checkpoint loading rejects corruption and config mismatch") {
  const ModelConfig cfg = tiny_config();
  CrnnModel model(cfg);
  model.init_parameters(27);
  TempDir dir("ckptbad");
  const std::string path = dir.file("m.ckpt");
  save_checkpoint(model, nullptr, path);

  ModelConfig other = cfg;
  other.gru_hidden = 16;
  CHECK_THROWS_AS(load_checkpoint(path, nullptr, &other), DataError);
  CHECK_NOTHROW(load_checkpoint(path, nullptr, &cfg));

  // Flip the magic.
  {
    std::FILE* f = std::fopen(path.c_str(), "r+b");
    std::fputc('X', f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(load_checkpoint(path), DataError);

  // Truncate.
  save_checkpoint(model, nullptr, path);
  std::filesystem::resize_file(path, 40);
  CHECK_THROWS_AS(load_checkpoint(path), DataError);

  CHECK_THROWS_AS(load_checkpoint(dir.file("absent.ckpt")), DataError);
}

TEST_CASE("forward validates inputs") {
  CrnnModel model(tiny_config());
  model.init_parameters(28);
  Tensor wrong({29, 16});
  CHECK_THROWS_AS(model.forward(wrong, nn::Mode::kTrain), std::invalid_argument);

  ModelConfig with_dropout = tiny_config();
  with_dropout.dropout = 0.5;
  CrnnModel dm(with_dropout);
  dm.init_parameters(29);
  Tensor mel({30, 16});
  CHECK_THROWS_AS(dm.forward(mel, nn::Mode::kTrain, nullptr), std::invalid_argument);
}

TEST_CASE("cosine schedule endpoints and midpoint") {
  CHECK(cosine_lr(0, 100, 1e-3, 1e-5) == doctest::Approx(1e-3));
  CHECK(cosine_lr(99, 100, 1e-3, 1e-5) == doctest::Approx(1e-5));
  const double mid = cosine_lr(50, 101, 1e-3, 0.0);
  CHECK(mid == doctest::Approx(5e-4).epsilon(1e-12));
  CHECK(cosine_lr(0, 1, 2e-3, 0.0) == doctest::Approx(2e-3));
  CHECK_THROWS_AS(cosine_lr(100, 100, 1e-3, 0.0), std::invalid_argument);
}

TEST_CASE("adam takes a bias-corrected first step of size lr") {
  std::vector<double> params = {1.0, -2.0};
  const std::vector<double> grads = {0.5, -0.25};
  AdamState state;
  adam_step(params, grads, state, 0.01);
  // First step: m_hat = g, v_hat = g^2 -> update = lr * g / (|g| + eps).
  CHECK(params[0] == doctest::Approx(1.0 - 0.01).epsilon(1e-6));
  CHECK(params[1] == doctest::Approx(-2.0 + 0.01).epsilon(1e-6));
  CHECK(state.step == 1);
}
