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

#ifndef OSD_NN_HPP
#define OSD_NN_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "osd/rng.hpp"
#include "osd/tensor.hpp"

// Differentiable building blocks for the CRNN: forward and backward passes
// in double precision. Backward functions accumulate (+=) into gradient
// tensors that the caller has allocated with matching shapes, so per-sample
// gradients can be summed in a fixed order.
namespace osd::nn {

enum class Mode { kTrain, kEval };

// ---------------------------------------------------------------------------
// Convolution, 3x3 kernel, stride 1, same zero padding.
// x: [T, F, Cin]; w: [3, 3, Cin, Cout]; b: [Cout]; y: [T, F, Cout].
// ---------------------------------------------------------------------------

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b);
void conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& grad_y, Tensor& grad_x,
                     Tensor& grad_w, Tensor& grad_b);

// ---------------------------------------------------------------------------
// Batch normalization over the trailing channel dimension. Statistics are
// taken over all leading dimensions of x (whatever normalization set the
// caller presents: a batch, or one sample's time-frequency positions).
// ---------------------------------------------------------------------------

struct BatchNormRunningStats {
  std::vector<double> mean;
  std::vector<double> var;
  long num_updates = 0;
};

struct BatchNormCache {
  std::vector<double> mean;     // [C] batch statistics used in the forward
  std::vector<double> var;      // [C]
  std::vector<double> inv_std;  // [C]
  Tensor xhat;                  // normalized input, same shape as x
};

// Train mode computes statistics from x, fills `cache` for backward, and,
// when `stats` is non-null, folds them into the running statistics with the
// given momentum. Eval mode normalizes with the running statistics and
// throws std::invalid_argument if none exist.
Tensor batchnorm_forward(const Tensor& x, const Tensor& gamma, const Tensor& beta, Mode mode,
                         BatchNormRunningStats* stats, double eps = 1e-5, double momentum = 0.1,
                         BatchNormCache* cache = nullptr);
void batchnorm_backward(const Tensor& grad_y, const Tensor& gamma, const BatchNormCache& cache,
                        Tensor& grad_x, Tensor& grad_gamma, Tensor& grad_beta);

// Minibatch variants: one tensor per sample, statistics pooled over every
// row of every sample (the joint batch-time-frequency reduction of standard
// batch normalization). Per-sample partial sums are combined across samples,
// so duplicating the whole batch reproduces the pooled moments bitwise. One
// cache per sample; each carries the shared moments and its own xhat.
std::vector<Tensor> batchnorm_forward_batch(std::span<const Tensor> xs, const Tensor& gamma,
                                            const Tensor& beta, Mode mode,
                                            BatchNormRunningStats* stats, double eps = 1e-5,
                                            double momentum = 0.1,
                                            std::vector<BatchNormCache>* caches = nullptr);
void batchnorm_backward_batch(std::span<const Tensor> grad_ys, const Tensor& gamma,
                              std::span<const BatchNormCache* const> caches,
                              std::span<Tensor> grad_xs, Tensor& grad_gamma, Tensor& grad_beta);

// ---------------------------------------------------------------------------
// Squeeze-excitation: squeeze = mean over (T, F); excitation =
// sigmoid(w2 * relu(w1 * squeeze)); output = x rescaled per channel.
// x: [T, F, C]; w1: [H, C]; w2: [C, H].
// ---------------------------------------------------------------------------

struct SeCache {
  std::vector<double> squeeze;  // [C]
  std::vector<double> hidden;   // [H] after relu
  std::vector<double> excite;   // [C] after sigmoid
};

Tensor se_block(const Tensor& x, const Tensor& w1, const Tensor& w2, SeCache* cache = nullptr);
void se_backward(const Tensor& x, const Tensor& w1, const Tensor& w2, const SeCache& cache,
                 const Tensor& grad_y, Tensor& grad_x, Tensor& grad_w1, Tensor& grad_w2);

// ---------------------------------------------------------------------------
// Non-overlapping average pooling. x: [T, F, C] -> [T/pt, F/pf, C].
// Throws std::invalid_argument when pt or pf does not divide the extent.
// ---------------------------------------------------------------------------

Tensor avg_pool2d(const Tensor& x, int pool_t, int pool_f);
void avg_pool2d_backward(const Tensor& grad_y, int pool_t, int pool_f, Tensor& grad_x);

// Mean over the frequency axis: [T, F, C] -> [T, C].
Tensor freq_average(const Tensor& x);
void freq_average_backward(const Tensor& grad_y, int num_freq, Tensor& grad_x);

// ---------------------------------------------------------------------------
// GRU, single direction, h0 = 0, full sequence returned.
// x: [T, D]; w_ih: [3H, D]; w_hh: [3H, H]; b_ih, b_hh: [3H].
// Gate order in the 3H axis: reset, update, candidate.
// ---------------------------------------------------------------------------

struct GruCache {
  Tensor r, z, n;   // [T, H] gate activations
  Tensor pre_hn;    // [T, H] W_hn*h_prev + b_hn before the reset product
  Tensor h;         // [T, H] hidden states
};

Tensor gru_forward(const Tensor& x, const Tensor& w_ih, const Tensor& w_hh, const Tensor& b_ih,
                   const Tensor& b_hh, GruCache* cache = nullptr);
void gru_backward(const Tensor& x, const Tensor& w_ih, const Tensor& w_hh, const GruCache& cache,
                  const Tensor& grad_h, Tensor& grad_x, Tensor& grad_w_ih, Tensor& grad_w_hh,
                  Tensor& grad_b_ih, Tensor& grad_b_hh);

struct BiGruWeights {
  const Tensor *w_ih_f, *w_hh_f, *b_ih_f, *b_hh_f;
  const Tensor *w_ih_b, *w_hh_b, *b_ih_b, *b_hh_b;
};

struct BiGruCache {
  GruCache fwd, bwd;
};

struct BiGruGrads {
  Tensor *w_ih_f, *w_hh_f, *b_ih_f, *b_hh_f;
  Tensor *w_ih_b, *w_hh_b, *b_ih_b, *b_hh_b;
};

// Forward direction on x and backward direction on time-reversed x,
// concatenated per frame: [T, D] -> [T, 2H].
Tensor bigru_forward(const Tensor& x, const BiGruWeights& w, BiGruCache* cache = nullptr);
void bigru_backward(const Tensor& x, const BiGruWeights& w, const BiGruCache& cache,
                    const Tensor& grad_y, Tensor& grad_x, const BiGruGrads& grads);

// ---------------------------------------------------------------------------
// Affine and elementwise layers.
// ---------------------------------------------------------------------------

// x: [N, in]; w: [out, in]; b: [out]; y: [N, out].
Tensor linear_forward(const Tensor& x, const Tensor& w, const Tensor& b);
void linear_backward(const Tensor& x, const Tensor& w, const Tensor& grad_y, Tensor& grad_x,
                     Tensor& grad_w, Tensor& grad_b);

Tensor relu(const Tensor& x);
// Mask recovered from the forward output: y > 0 exactly where x > 0.
void relu_backward(const Tensor& y, const Tensor& grad_y, Tensor& grad_x);

Tensor leaky_relu(const Tensor& x, double slope = 0.01);
void leaky_relu_backward(const Tensor& x, const Tensor& grad_y, double slope, Tensor& grad_x);

// Inverted-scaling dropout: kept units are divided by (1 - p) in train mode;
// eval mode is the identity. `mask` receives per-element factors
// (0 or 1/(1-p)) for the backward pass. Throws for p outside [0, 1).
Tensor dropout(const Tensor& x, double p, Mode mode, Rng& rng, Tensor* mask = nullptr);
void dropout_backward(const Tensor& mask, const Tensor& grad_y, Tensor& grad_x);

// ---------------------------------------------------------------------------
// Softmax and class-weighted cross-entropy.
// ---------------------------------------------------------------------------

// Softmax over the last dimension, computed with max subtraction.
Tensor softmax(const Tensor& logits);

// loss = sum_i w[label_i] * (-log probs[i, label_i]) / sum_i w[label_i].
// probs: [N, K]. Probabilities are floored at 1e-12 inside the log.
double weighted_ce_loss(const Tensor& probs, std::span<const std::uint8_t> labels,
                        std::span<const double> class_weights);

// Fused softmax + weighted cross-entropy on logits [N, K]. Returns the
// unnormalized numerator (sum of w * -log p) and denominator (sum of w);
// loss = num / den. grad_logits receives d(num)/d(logits), so a caller
// aggregating several samples can scale the summed gradients by one global
// 1/den afterwards.
struct CeSums {
  double num = 0.0;
  double den = 0.0;
};
CeSums softmax_xent_with_grad(const Tensor& logits, std::span<const std::uint8_t> labels,
                              std::span<const double> class_weights, Tensor& grad_logits);

// w[c] = total / (K * counts[c]), which equalizes per-class weighted mass.
// Throws std::invalid_argument when any count is zero.
std::vector<double> class_weights_from_counts(std::span<const std::int64_t> counts);

}  // namespace osd::nn

#endif  // OSD_NN_HPP
