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

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "osd/nn.hpp"

namespace osd::nn {

namespace {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatRM>;
using MapCM = Eigen::Map<const MatRM>;
using MapV = Eigen::Map<Eigen::VectorXd>;
using MapCV = Eigen::Map<const Eigen::VectorXd>;

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// Zero-padded copy with a one-pixel ring: [T, F, C] -> [T+2, F+2, C].
Tensor pad_ring(const Tensor& x) {
  const int t_dim = x.dim(0), f_dim = x.dim(1), c = x.dim(2);
  Tensor xp({t_dim + 2, f_dim + 2, c});
  for (int t = 0; t < t_dim; ++t) {
    std::copy_n(&x.at(t, 0, 0), static_cast<size_t>(f_dim) * c, &xp.at(t + 1, 1, 0));
  }
  return xp;
}

}  // namespace

// ---------------------------------------------------------------------------
// conv2d
// ---------------------------------------------------------------------------

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
  require(x.rank() == 3, "conv2d: input must be [T, F, Cin]");
  require(w.rank() == 4 && w.dim(0) == 3 && w.dim(1) == 3, "conv2d: weights must be [3, 3, Cin, Cout]");
  require(w.dim(2) == x.dim(2), "conv2d: channel mismatch between input and weights");
  require(b.rank() == 1 && b.dim(0) == w.dim(3), "conv2d: bias must be [Cout]");

  const int t_dim = x.dim(0), f_dim = x.dim(1), cin = x.dim(2), cout = w.dim(3);
  const Tensor xp = pad_ring(x);
  Tensor y({t_dim, f_dim, cout});

  MapCV bias(b.data(), cout);
  for (int t = 0; t < t_dim; ++t) {
    MapM y_row(&y.at(t, 0, 0), f_dim, cout);
    y_row.rowwise() = bias.transpose();
    // One accumulating GEMM per kernel tap; the padded slice starting at
    // (t + dt, df) is contiguous over f, so no im2col scratch is needed.
    for (int dt = 0; dt < 3; ++dt) {
      for (int df = 0; df < 3; ++df) {
        MapCM patch(&xp.at(t + dt, df, 0), f_dim, cin);
        MapCM wk(&w.at(dt, df, 0, 0) /*[Cin, Cout] slab*/, cin, cout);
        y_row.noalias() += patch * wk;
      }
    }
  }
  return y;
}

void conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& grad_y, Tensor& grad_x,
                     Tensor& grad_w, Tensor& grad_b) {
  require(grad_y.rank() == 3 && grad_y.dim(0) == x.dim(0) && grad_y.dim(1) == x.dim(1) &&
              grad_y.dim(2) == w.dim(3),
          "conv2d_backward: grad_y shape mismatch");
  const int t_dim = x.dim(0), f_dim = x.dim(1), cin = x.dim(2), cout = w.dim(3);

  const Tensor xp = pad_ring(x);
  Tensor gxp({t_dim + 2, f_dim + 2, cin});

  MapV gb(grad_b.data(), cout);
  for (int t = 0; t < t_dim; ++t) {
    MapCM gy_row(&grad_y.at(t, 0, 0), f_dim, cout);
    gb += gy_row.colwise().sum();
    for (int dt = 0; dt < 3; ++dt) {
      for (int df = 0; df < 3; ++df) {
        MapCM patch(&xp.at(t + dt, df, 0), f_dim, cin);
        MapM gwk(&grad_w.at(dt, df, 0, 0), cin, cout);
        gwk.noalias() += patch.transpose() * gy_row;

        MapCM wk(&w.at(dt, df, 0, 0), cin, cout);
        MapM gxp_slice(&gxp.at(t + dt, df, 0), f_dim, cin);
        gxp_slice.noalias() += gy_row * wk.transpose();
      }
    }
  }
  for (int t = 0; t < t_dim; ++t) {
    const double* src = &gxp.at(t + 1, 1, 0);
    double* dst = &grad_x.at(t, 0, 0);
    for (size_t i = 0; i < static_cast<size_t>(f_dim) * cin; ++i) dst[i] += src[i];
  }
}

// ---------------------------------------------------------------------------
// batchnorm
// ---------------------------------------------------------------------------

Tensor batchnorm_forward(const Tensor& x, const Tensor& gamma, const Tensor& beta, Mode mode,
                         BatchNormRunningStats* stats, double eps, double momentum,
                         BatchNormCache* cache) {
  std::vector<BatchNormCache> caches;
  std::vector<Tensor> ys =
      batchnorm_forward_batch(std::span<const Tensor>(&x, 1), gamma, beta, mode, stats, eps,
                              momentum, cache != nullptr ? &caches : nullptr);
  if (cache != nullptr) *cache = std::move(caches[0]);
  return std::move(ys[0]);
}

std::vector<Tensor> batchnorm_forward_batch(std::span<const Tensor> xs, const Tensor& gamma,
                                            const Tensor& beta, Mode mode,
                                            BatchNormRunningStats* stats, double eps,
                                            double momentum, std::vector<BatchNormCache>* caches) {
  require(!xs.empty(), "batchnorm: batch must not be empty");
  require(xs[0].rank() >= 2, "batchnorm: input rank must be >= 2");
  const int c = xs[0].dim(xs[0].rank() - 1);
  require(gamma.rank() == 1 && gamma.dim(0) == c, "batchnorm: gamma must be [C]");
  require(beta.rank() == 1 && beta.dim(0) == c, "batchnorm: beta must be [C]");
  size_t total_rows = 0;
  for (const Tensor& x : xs) {
    require(x.rank() >= 2 && x.dim(x.rank() - 1) == c,
            "batchnorm: channel extents differ across the batch");
    total_rows += x.size() / c;
  }
  require(total_rows >= 1, "batchnorm: reduction set is empty");
  const double inv_rows = 1.0 / static_cast<double>(total_rows);

  std::vector<double> mean(c), var(c);
  if (mode == Mode::kTrain) {
    // Two passes with per-sample partial sums: a duplicated batch doubles
    // each partial exactly, and (2s)/(2N) rounds identically to s/N, so the
    // pooled moments are bitwise invariant under duplication.
    std::vector<double> total(c, 0.0), partial(c);
    for (const Tensor& x : xs) {
      std::fill(partial.begin(), partial.end(), 0.0);
      const size_t rows = x.size() / c;
      for (size_t i = 0; i < rows; ++i) {
        for (int k = 0; k < c; ++k) partial[k] += x.v[i * c + k];
      }
      for (int k = 0; k < c; ++k) total[k] += partial[k];
    }
    for (int k = 0; k < c; ++k) mean[k] = total[k] * inv_rows;
    std::fill(total.begin(), total.end(), 0.0);
    for (const Tensor& x : xs) {
      std::fill(partial.begin(), partial.end(), 0.0);
      const size_t rows = x.size() / c;
      for (size_t i = 0; i < rows; ++i) {
        for (int k = 0; k < c; ++k) {
          const double d = x.v[i * c + k] - mean[k];
          partial[k] += d * d;
        }
      }
      for (int k = 0; k < c; ++k) total[k] += partial[k];
    }
    for (int k = 0; k < c; ++k) var[k] = total[k] * inv_rows;  // biased, as normalized with
    if (stats != nullptr) {
      if (stats->mean.empty()) {
        stats->mean.assign(c, 0.0);
        stats->var.assign(c, 1.0);
      }
      for (int k = 0; k < c; ++k) {
        stats->mean[k] = (1.0 - momentum) * stats->mean[k] + momentum * mean[k];
        stats->var[k] = (1.0 - momentum) * stats->var[k] + momentum * var[k];
      }
      stats->num_updates += 1;
    }
  } else {
    require(stats != nullptr && !stats->mean.empty(),
            "batchnorm: eval mode requires running statistics");
    mean = stats->mean;
    var = stats->var;
  }

  std::vector<double> inv_std(c);
  for (int k = 0; k < c; ++k) inv_std[k] = 1.0 / std::sqrt(var[k] + eps);

  if (caches != nullptr) caches->assign(xs.size(), BatchNormCache{});
  std::vector<Tensor> ys;
  ys.reserve(xs.size());
  for (size_t s = 0; s < xs.size(); ++s) {
    const Tensor& x = xs[s];
    Tensor y(x.shape);
    Tensor* xhat_out = nullptr;
    if (caches != nullptr) {
      BatchNormCache& cc = (*caches)[s];
      cc.mean = mean;
      cc.var = var;
      cc.inv_std = inv_std;
      cc.xhat = Tensor(x.shape);
      xhat_out = &cc.xhat;
    }
    const size_t rows = x.size() / c;
    for (size_t i = 0; i < rows; ++i) {
      for (int k = 0; k < c; ++k) {
        const double xhat = (x.v[i * c + k] - mean[k]) * inv_std[k];
        if (xhat_out != nullptr) xhat_out->v[i * c + k] = xhat;
        y.v[i * c + k] = gamma.at(k) * xhat + beta.at(k);
      }
    }
    ys.push_back(std::move(y));
  }
  return ys;
}

void batchnorm_backward(const Tensor& grad_y, const Tensor& gamma, const BatchNormCache& cache,
                        Tensor& grad_x, Tensor& grad_gamma, Tensor& grad_beta) {
  const BatchNormCache* cache_ptr = &cache;
  batchnorm_backward_batch(std::span<const Tensor>(&grad_y, 1), gamma,
                           std::span<const BatchNormCache* const>(&cache_ptr, 1),
                           std::span<Tensor>(&grad_x, 1), grad_gamma, grad_beta);
}

void batchnorm_backward_batch(std::span<const Tensor> grad_ys, const Tensor& gamma,
                              std::span<const BatchNormCache* const> caches,
                              std::span<Tensor> grad_xs, Tensor& grad_gamma, Tensor& grad_beta) {
  require(!grad_ys.empty() && grad_ys.size() == caches.size() && grad_ys.size() == grad_xs.size(),
          "batchnorm: backward batch sizes differ");
  const int c = grad_ys[0].dim(grad_ys[0].rank() - 1);
  size_t total_rows = 0;
  for (const Tensor& gy : grad_ys) total_rows += gy.size() / c;
  const double inv_rows = 1.0 / static_cast<double>(total_rows);

  // Pooled sums with per-sample partials, mirroring the forward reduction.
  std::vector<double> sum_gy(c, 0.0), sum_gy_xhat(c, 0.0), pg(c), pgx(c);
  for (size_t s = 0; s < grad_ys.size(); ++s) {
    const Tensor& gy_t = grad_ys[s];
    const Tensor& xh_t = caches[s]->xhat;
    const size_t rows = gy_t.size() / c;
    std::fill(pg.begin(), pg.end(), 0.0);
    std::fill(pgx.begin(), pgx.end(), 0.0);
    for (size_t i = 0; i < rows; ++i) {
      for (int k = 0; k < c; ++k) {
        const double gy = gy_t.v[i * c + k];
        pg[k] += gy;
        pgx[k] += gy * xh_t.v[i * c + k];
      }
    }
    for (int k = 0; k < c; ++k) {
      sum_gy[k] += pg[k];
      sum_gy_xhat[k] += pgx[k];
    }
  }
  for (int k = 0; k < c; ++k) {
    grad_gamma.at(k) += sum_gy_xhat[k];
    grad_beta.at(k) += sum_gy[k];
  }

  // Per channel: dx = inv_std * (dxhat - mean(dxhat) - xhat * mean(dxhat*xhat))
  // where dxhat = gy * gamma and the means run over the pooled set.
  for (size_t s = 0; s < grad_ys.size(); ++s) {
    const Tensor& gy_t = grad_ys[s];
    const BatchNormCache& cc = *caches[s];
    Tensor& gx = grad_xs[s];
    const size_t rows = gy_t.size() / c;
    for (int k = 0; k < c; ++k) {
      const double g = gamma.at(k);
      const double mean_dxhat = g * sum_gy[k] * inv_rows;
      const double mean_dxhat_xhat = g * sum_gy_xhat[k] * inv_rows;
      const double istd = cc.inv_std[k];
      for (size_t i = 0; i < rows; ++i) {
        const double dxhat = gy_t.v[i * c + k] * g;
        gx.v[i * c + k] += istd * (dxhat - mean_dxhat - cc.xhat.v[i * c + k] * mean_dxhat_xhat);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// squeeze-excitation
// ---------------------------------------------------------------------------

Tensor se_block(const Tensor& x, const Tensor& w1, const Tensor& w2, SeCache* cache) {
  require(x.rank() == 3, "se_block: input must be [T, F, C]");
  const int c = x.dim(2);
  require(w1.rank() == 2 && w1.dim(1) == c, "se_block: w1 must be [H, C]");
  const int h = w1.dim(0);
  require(w2.rank() == 2 && w2.dim(0) == c && w2.dim(1) == h, "se_block: w2 must be [C, H]");
  const size_t positions = static_cast<size_t>(x.dim(0)) * x.dim(1);
  require(positions >= 1, "se_block: reduction dimension is empty");

  std::vector<double> squeeze(c, 0.0);
  for (size_t i = 0; i < positions; ++i) {
    for (int k = 0; k < c; ++k) squeeze[k] += x.v[i * c + k];
  }
  for (int k = 0; k < c; ++k) squeeze[k] /= static_cast<double>(positions);

  std::vector<double> hidden(h);
  MapCM w1m(w1.data(), h, c);
  MapCV sq(squeeze.data(), c);
  MapV hid(hidden.data(), h);
  hid.noalias() = w1m * sq;
  for (int j = 0; j < h; ++j) hidden[j] = std::max(0.0, hidden[j]);

  std::vector<double> excite(c);
  MapCM w2m(w2.data(), c, h);
  MapCV hidc(hidden.data(), h);
  MapV exc(excite.data(), c);
  exc.noalias() = w2m * hidc;
  for (int k = 0; k < c; ++k) excite[k] = 1.0 / (1.0 + std::exp(-excite[k]));

  Tensor y(x.shape);
  for (size_t i = 0; i < positions; ++i) {
    for (int k = 0; k < c; ++k) y.v[i * c + k] = x.v[i * c + k] * excite[k];
  }
  if (cache != nullptr) {
    cache->squeeze = std::move(squeeze);
    cache->hidden = std::move(hidden);
    cache->excite = std::move(excite);
  }
  return y;
}

void se_backward(const Tensor& x, const Tensor& w1, const Tensor& w2, const SeCache& cache,
                 const Tensor& grad_y, Tensor& grad_x, Tensor& grad_w1, Tensor& grad_w2) {
  const int c = x.dim(2);
  const int h = w1.dim(0);
  const size_t positions = static_cast<size_t>(x.dim(0)) * x.dim(1);

  // Through the rescale: d_excite[k] = sum_i gy*x; dx gets the direct term.
  std::vector<double> d_excite(c, 0.0);
  for (size_t i = 0; i < positions; ++i) {
    for (int k = 0; k < c; ++k) {
      d_excite[k] += grad_y.v[i * c + k] * x.v[i * c + k];
      grad_x.v[i * c + k] += grad_y.v[i * c + k] * cache.excite[k];
    }
  }

  // Through the gate: sigmoid, w2, relu, w1, squeeze mean.
  std::vector<double> d_pre2(c);
  for (int k = 0; k < c; ++k) {
    const double e = cache.excite[k];
    d_pre2[k] = d_excite[k] * e * (1.0 - e);
  }
  MapCM w2m(w2.data(), c, h);
  MapCV dp2(d_pre2.data(), c);
  MapCV hid(cache.hidden.data(), h);
  MapM gw2(grad_w2.data(), c, h);
  gw2.noalias() += dp2 * hid.transpose();

  std::vector<double> d_hidden(h);
  MapV dh(d_hidden.data(), h);
  dh.noalias() = w2m.transpose() * dp2;
  for (int j = 0; j < h; ++j) {
    if (cache.hidden[j] <= 0.0) d_hidden[j] = 0.0;
  }

  MapCM w1m(w1.data(), h, c);
  MapCV sq(cache.squeeze.data(), c);
  MapCV dhc(d_hidden.data(), h);
  MapM gw1(grad_w1.data(), h, c);
  gw1.noalias() += dhc * sq.transpose();

  std::vector<double> d_squeeze(c);
  MapV dsq(d_squeeze.data(), c);
  dsq.noalias() = w1m.transpose() * dhc;

  const double inv_positions = 1.0 / static_cast<double>(positions);
  for (size_t i = 0; i < positions; ++i) {
    for (int k = 0; k < c; ++k) grad_x.v[i * c + k] += d_squeeze[k] * inv_positions;
  }
}

// ---------------------------------------------------------------------------
// pooling and frequency average
// ---------------------------------------------------------------------------

Tensor avg_pool2d(const Tensor& x, int pool_t, int pool_f) {
  require(x.rank() == 3, "avg_pool2d: input must be [T, F, C]");
  require(pool_t >= 1 && pool_f >= 1, "avg_pool2d: pool extents must be positive");
  require(x.dim(0) % pool_t == 0, "avg_pool2d: pool_t does not divide T");
  require(x.dim(1) % pool_f == 0, "avg_pool2d: pool_f does not divide F");

  const int t_out = x.dim(0) / pool_t, f_out = x.dim(1) / pool_f, c = x.dim(2);
  const double inv_area = 1.0 / (pool_t * pool_f);
  Tensor y({t_out, f_out, c});
  for (int t = 0; t < t_out; ++t) {
    for (int dt = 0; dt < pool_t; ++dt) {
      for (int f = 0; f < f_out; ++f) {
        for (int df = 0; df < pool_f; ++df) {
          const double* src = &x.at(t * pool_t + dt, f * pool_f + df, 0);
          double* dst = &y.at(t, f, 0);
          for (int k = 0; k < c; ++k) dst[k] += src[k] * inv_area;
        }
      }
    }
  }
  return y;
}

void avg_pool2d_backward(const Tensor& grad_y, int pool_t, int pool_f, Tensor& grad_x) {
  const int t_out = grad_y.dim(0), f_out = grad_y.dim(1), c = grad_y.dim(2);
  const double inv_area = 1.0 / (pool_t * pool_f);
  for (int t = 0; t < t_out; ++t) {
    for (int dt = 0; dt < pool_t; ++dt) {
      for (int f = 0; f < f_out; ++f) {
        for (int df = 0; df < pool_f; ++df) {
          const double* src = &grad_y.at(t, f, 0);
          double* dst = &grad_x.at(t * pool_t + dt, f * pool_f + df, 0);
          for (int k = 0; k < c; ++k) dst[k] += src[k] * inv_area;
        }
      }
    }
  }
}

Tensor freq_average(const Tensor& x) {
  require(x.rank() == 3, "freq_average: input must be [T, F, C]");
  const int t_dim = x.dim(0), f_dim = x.dim(1), c = x.dim(2);
  const double inv_f = 1.0 / f_dim;
  Tensor y({t_dim, c});
  for (int t = 0; t < t_dim; ++t) {
    for (int f = 0; f < f_dim; ++f) {
      const double* src = &x.at(t, f, 0);
      double* dst = &y.at(t, 0);
      for (int k = 0; k < c; ++k) dst[k] += src[k] * inv_f;
    }
  }
  return y;
}

void freq_average_backward(const Tensor& grad_y, int num_freq, Tensor& grad_x) {
  const int t_dim = grad_y.dim(0), c = grad_y.dim(1);
  const double inv_f = 1.0 / num_freq;
  for (int t = 0; t < t_dim; ++t) {
    for (int f = 0; f < num_freq; ++f) {
      const double* src = &grad_y.at(t, 0);
      double* dst = &grad_x.at(t, f, 0);
      for (int k = 0; k < c; ++k) dst[k] += src[k] * inv_f;
    }
  }
}

// ---------------------------------------------------------------------------
// linear and elementwise
// ---------------------------------------------------------------------------

Tensor linear_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
  require(x.rank() == 2, "linear: input must be [N, in]");
  require(w.rank() == 2 && w.dim(1) == x.dim(1), "linear: weight must be [out, in]");
  require(b.rank() == 1 && b.dim(0) == w.dim(0), "linear: bias must be [out]");
  const int n = x.dim(0), in = x.dim(1), out = w.dim(0);
  Tensor y({n, out});
  MapCM xm(x.data(), n, in);
  MapCM wm(w.data(), out, in);
  MapCV bv(b.data(), out);
  MapM ym(y.data(), n, out);
  ym.noalias() = xm * wm.transpose();
  ym.rowwise() += bv.transpose();
  return y;
}

void linear_backward(const Tensor& x, const Tensor& w, const Tensor& grad_y, Tensor& grad_x,
                     Tensor& grad_w, Tensor& grad_b) {
  const int n = x.dim(0), in = x.dim(1), out = w.dim(0);
  MapCM xm(x.data(), n, in);
  MapCM wm(w.data(), out, in);
  MapCM gym(grad_y.data(), n, out);
  MapM gxm(grad_x.data(), n, in);
  MapM gwm(grad_w.data(), out, in);
  MapV gbv(grad_b.data(), out);
  gxm.noalias() += gym * wm;
  gwm.noalias() += gym.transpose() * xm;
  gbv += gym.colwise().sum();
}

Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (double& value : y.v) value = std::max(0.0, value);
  return y;
}

void relu_backward(const Tensor& y, const Tensor& grad_y, Tensor& grad_x) {
  for (size_t i = 0; i < y.size(); ++i) {
    if (y.v[i] > 0.0) grad_x.v[i] += grad_y.v[i];
  }
}

Tensor leaky_relu(const Tensor& x, double slope) {
  Tensor y = x;
  for (double& value : y.v) {
    if (value < 0.0) value *= slope;
  }
  return y;
}

void leaky_relu_backward(const Tensor& x, const Tensor& grad_y, double slope, Tensor& grad_x) {
  for (size_t i = 0; i < x.size(); ++i) {
    grad_x.v[i] += grad_y.v[i] * (x.v[i] > 0.0 ? 1.0 : slope);
  }
}

Tensor dropout(const Tensor& x, double p, Mode mode, Rng& rng, Tensor* mask) {
  require(p >= 0.0 && p < 1.0, "dropout: p must lie in [0, 1)");
  if (mode == Mode::kEval || p == 0.0) {
    if (mask != nullptr) {
      *mask = Tensor(x.shape);
      mask->fill(1.0);
    }
    return x;
  }
  const double keep_scale = 1.0 / (1.0 - p);
  Tensor y(x.shape);
  Tensor local_mask(x.shape);
  for (size_t i = 0; i < x.size(); ++i) {
    const double factor = (rng.uniform() >= p) ? keep_scale : 0.0;
    local_mask.v[i] = factor;
    y.v[i] = x.v[i] * factor;
  }
  if (mask != nullptr) *mask = std::move(local_mask);
  return y;
}

void dropout_backward(const Tensor& mask, const Tensor& grad_y, Tensor& grad_x) {
  for (size_t i = 0; i < mask.size(); ++i) grad_x.v[i] += grad_y.v[i] * mask.v[i];
}

// ---------------------------------------------------------------------------
// softmax and loss
// ---------------------------------------------------------------------------

Tensor softmax(const Tensor& logits) {
  require(logits.rank() >= 1, "softmax: empty tensor");
  const int k_dim = logits.dim(logits.rank() - 1);
  const size_t rows = logits.size() / k_dim;
  Tensor probs(logits.shape);
  for (size_t i = 0; i < rows; ++i) {
    const double* in = logits.data() + i * k_dim;
    double* out = probs.data() + i * k_dim;
    double max_logit = in[0];
    for (int k = 1; k < k_dim; ++k) max_logit = std::max(max_logit, in[k]);
    double sum = 0.0;
    for (int k = 0; k < k_dim; ++k) {
      out[k] = std::exp(in[k] - max_logit);
      sum += out[k];
    }
    const double inv_sum = 1.0 / sum;
    for (int k = 0; k < k_dim; ++k) out[k] *= inv_sum;
  }
  return probs;
}

double weighted_ce_loss(const Tensor& probs, std::span<const std::uint8_t> labels,
                        std::span<const double> class_weights) {
  require(probs.rank() == 2, "weighted_ce_loss: probs must be [N, K]");
  const int k_dim = probs.dim(1);
  require(labels.size() == static_cast<size_t>(probs.dim(0)),
          "weighted_ce_loss: label count mismatch");
  require(class_weights.size() == static_cast<size_t>(k_dim),
          "weighted_ce_loss: weight count mismatch");
  for (double w : class_weights) require(w > 0.0, "weighted_ce_loss: weights must be positive");

  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < labels.size(); ++i) {
    const int label = labels[i];
    require(label >= 0 && label < k_dim, "weighted_ce_loss: label out of range");
    const double p = std::max(probs.at(static_cast<int>(i), label), 1e-12);
    num += class_weights[label] * -std::log(p);
    den += class_weights[label];
  }
  return num / den;
}

CeSums softmax_xent_with_grad(const Tensor& logits, std::span<const std::uint8_t> labels,
                              std::span<const double> class_weights, Tensor& grad_logits) {
  require(logits.rank() == 2, "softmax_xent: logits must be [N, K]");
  const int k_dim = logits.dim(1);
  require(labels.size() == static_cast<size_t>(logits.dim(0)), "softmax_xent: label count mismatch");

  const Tensor probs = softmax(logits);
  CeSums sums;
  for (size_t i = 0; i < labels.size(); ++i) {
    const int label = labels[i];
    require(label >= 0 && label < k_dim, "softmax_xent: label out of range");
    const double w = class_weights[label];
    const double p = std::max(probs.at(static_cast<int>(i), label), 1e-12);
    sums.num += w * -std::log(p);
    sums.den += w;
    for (int k = 0; k < k_dim; ++k) {
      const double indicator = (k == label) ? 1.0 : 0.0;
      grad_logits.at(static_cast<int>(i), k) +=
          w * (probs.at(static_cast<int>(i), k) - indicator);
    }
  }
  return sums;
}

std::vector<double> class_weights_from_counts(std::span<const std::int64_t> counts) {
  std::int64_t total = 0;
  for (std::int64_t c : counts) {
    require(c > 0, "class_weights_from_counts: every class needs a nonzero count");
    total += c;
  }
  std::vector<double> weights(counts.size());
  for (size_t k = 0; k < counts.size(); ++k) {
    weights[k] = static_cast<double>(total) /
                 (static_cast<double>(counts.size()) * static_cast<double>(counts[k]));
  }
  return weights;
}

}  // namespace osd::nn
