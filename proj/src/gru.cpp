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
#include <cmath>
#include <stdexcept>

#include "osd/nn.hpp"

namespace osd::nn {

namespace {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatRM>;
using MapCM = Eigen::Map<const MatRM>;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_gru_shapes(const Tensor& x, const Tensor& w_ih, const Tensor& w_hh, const Tensor& b_ih,
                      const Tensor& b_hh) {
  if (x.rank() != 2) throw std::invalid_argument("gru: input must be [T, D]");
  if (w_ih.rank() != 2 || w_ih.dim(0) % 3 != 0 || w_ih.dim(1) != x.dim(1)) {
    throw std::invalid_argument("gru: w_ih must be [3H, D]");
  }
  const int h = w_ih.dim(0) / 3;
  if (w_hh.rank() != 2 || w_hh.dim(0) != 3 * h || w_hh.dim(1) != h) {
    throw std::invalid_argument("gru: w_hh must be [3H, H]");
  }
  if (b_ih.rank() != 1 || b_ih.dim(0) != 3 * h || b_hh.rank() != 1 || b_hh.dim(0) != 3 * h) {
    throw std::invalid_argument("gru: biases must be [3H]");
  }
}

Tensor reverse_time(const Tensor& x) {
  const int t_dim = x.dim(0), d = x.dim(1);
  Tensor y({t_dim, d});
  for (int t = 0; t < t_dim; ++t) {
    std::copy_n(&x.at(t, 0), d, &y.at(t_dim - 1 - t, 0));
  }
  return y;
}

}  // namespace

Tensor gru_forward(const Tensor& x, const Tensor& w_ih, const Tensor& w_hh, const Tensor& b_ih,
                   const Tensor& b_hh, GruCache* cache) {
  check_gru_shapes(x, w_ih, w_hh, b_ih, b_hh);
  const int t_dim = x.dim(0), d = x.dim(1), h = w_ih.dim(0) / 3;

  // Input projections for all steps in one GEMM: [T, 3H].
  Tensor pre_i({t_dim, 3 * h});
  {
    MapCM xm(x.data(), t_dim, d);
    MapCM wm(w_ih.data(), 3 * h, d);
    MapM pm(pre_i.data(), t_dim, 3 * h);
    pm.noalias() = xm * wm.transpose();
    for (int t = 0; t < t_dim; ++t) {
      for (int j = 0; j < 3 * h; ++j) pre_i.at(t, j) += b_ih.at(j);
    }
  }

  Tensor out({t_dim, h});
  if (cache != nullptr) {
    cache->r = Tensor({t_dim, h});
    cache->z = Tensor({t_dim, h});
    cache->n = Tensor({t_dim, h});
    cache->pre_hn = Tensor({t_dim, h});
    cache->h = Tensor({t_dim, h});
  }

  std::vector<double> h_prev(h, 0.0);
  std::vector<double> pre_h(3 * h);
  MapCM whm(w_hh.data(), 3 * h, h);
  for (int t = 0; t < t_dim; ++t) {
    {
      Eigen::Map<const Eigen::VectorXd> hp(h_prev.data(), h);
      Eigen::Map<Eigen::VectorXd> ph(pre_h.data(), 3 * h);
      ph.noalias() = whm * hp;
    }
    for (int j = 0; j < 3 * h; ++j) pre_h[j] += b_hh.at(j);

    for (int j = 0; j < h; ++j) {
      const double r = sigmoid(pre_i.at(t, j) + pre_h[j]);
      const double z = sigmoid(pre_i.at(t, h + j) + pre_h[h + j]);
      const double pre_hn = pre_h[2 * h + j];
      const double n = std::tanh(pre_i.at(t, 2 * h + j) + r * pre_hn);
      const double h_new = (1.0 - z) * n + z * h_prev[j];
      out.at(t, j) = h_new;
      if (cache != nullptr) {
        cache->r.at(t, j) = r;
        cache->z.at(t, j) = z;
        cache->n.at(t, j) = n;
        cache->pre_hn.at(t, j) = pre_hn;
        cache->h.at(t, j) = h_new;
      }
    }
    std::copy_n(&out.at(t, 0), h, h_prev.data());
  }
  return out;
}

void gru_backward(const Tensor& x, const Tensor& w_ih, const Tensor& w_hh, const GruCache& cache,
                  const Tensor& grad_h, Tensor& grad_x, Tensor& grad_w_ih, Tensor& grad_w_hh,
                  Tensor& grad_b_ih, Tensor& grad_b_hh) {
  const int t_dim = x.dim(0), d = x.dim(1), h = w_ih.dim(0) / 3;
  if (grad_h.rank() != 2 || grad_h.dim(0) != t_dim || grad_h.dim(1) != h) {
    throw std::invalid_argument("gru_backward: grad_h must be [T, H]");
  }

  // Per-step gradients w.r.t. the input-side and hidden-side pre-activations,
  // collected so the weight gradients reduce to two GEMMs after the loop.
  Tensor d_pre_i({t_dim, 3 * h});
  Tensor d_pre_h({t_dim, 3 * h});

  std::vector<double> dh_carry(h, 0.0);
  MapCM whm(w_hh.data(), 3 * h, h);
  for (int t = t_dim - 1; t >= 0; --t) {
    for (int j = 0; j < h; ++j) {
      const double dh = grad_h.at(t, j) + dh_carry[j];
      const double r = cache.r.at(t, j);
      const double z = cache.z.at(t, j);
      const double n = cache.n.at(t, j);
      const double pre_hn = cache.pre_hn.at(t, j);
      const double h_prev = (t > 0) ? cache.h.at(t - 1, j) : 0.0;

      const double dn = dh * (1.0 - z);
      const double dz = dh * (h_prev - n);
      const double d_tanh_in = dn * (1.0 - n * n);
      const double dr = d_tanh_in * pre_hn;

      const double d_pre_r = dr * r * (1.0 - r);
      const double d_pre_z = dz * z * (1.0 - z);

      d_pre_i.at(t, j) = d_pre_r;
      d_pre_i.at(t, h + j) = d_pre_z;
      d_pre_i.at(t, 2 * h + j) = d_tanh_in;

      d_pre_h.at(t, j) = d_pre_r;
      d_pre_h.at(t, h + j) = d_pre_z;
      d_pre_h.at(t, 2 * h + j) = d_tanh_in * r;

      dh_carry[j] = dh * z;
    }
    // Hidden pre-activations feed h_prev through w_hh.
    Eigen::Map<const Eigen::VectorXd> dph(&d_pre_h.at(t, 0), 3 * h);
    Eigen::Map<Eigen::VectorXd> carry(dh_carry.data(), h);
    carry.noalias() += whm.transpose() * dph;
  }

  // h_prev rows: row 0 is the zero initial state, row t is h[t-1].
  Tensor h_prev_rows({t_dim, h});
  for (int t = 1; t < t_dim; ++t) {
    std::copy_n(&cache.h.at(t - 1, 0), h, &h_prev_rows.at(t, 0));
  }

  MapCM xm(x.data(), t_dim, d);
  MapCM dpi(d_pre_i.data(), t_dim, 3 * h);
  MapCM dph_all(d_pre_h.data(), t_dim, 3 * h);
  MapCM hprev(h_prev_rows.data(), t_dim, h);
  MapCM wim(w_ih.data(), 3 * h, d);

  MapM gwi(grad_w_ih.data(), 3 * h, d);
  MapM gwh(grad_w_hh.data(), 3 * h, h);
  MapM gx(grad_x.data(), t_dim, d);
  gwi.noalias() += dpi.transpose() * xm;
  gwh.noalias() += dph_all.transpose() * hprev;
  gx.noalias() += dpi * wim;

  Eigen::Map<Eigen::VectorXd> gbi(grad_b_ih.data(), 3 * h);
  Eigen::Map<Eigen::VectorXd> gbh(grad_b_hh.data(), 3 * h);
  gbi += dpi.colwise().sum();
  gbh += dph_all.colwise().sum();
}

Tensor bigru_forward(const Tensor& x, const BiGruWeights& w, BiGruCache* cache) {
  const int t_dim = x.dim(0);
  const int h = w.w_ih_f->dim(0) / 3;

  Tensor h_fwd = gru_forward(x, *w.w_ih_f, *w.w_hh_f, *w.b_ih_f, *w.b_hh_f,
                             cache != nullptr ? &cache->fwd : nullptr);
  Tensor x_rev = reverse_time(x);
  Tensor h_bwd_rev = gru_forward(x_rev, *w.w_ih_b, *w.w_hh_b, *w.b_ih_b, *w.b_hh_b,
                                 cache != nullptr ? &cache->bwd : nullptr);

  Tensor y({t_dim, 2 * h});
  for (int t = 0; t < t_dim; ++t) {
    std::copy_n(&h_fwd.at(t, 0), h, &y.at(t, 0));
    std::copy_n(&h_bwd_rev.at(t_dim - 1 - t, 0), h, &y.at(t, h));
  }
  return y;
}

void bigru_backward(const Tensor& x, const BiGruWeights& w, const BiGruCache& cache,
                    const Tensor& grad_y, Tensor& grad_x, const BiGruGrads& grads) {
  const int t_dim = x.dim(0);
  const int h = w.w_ih_f->dim(0) / 3;
  if (grad_y.rank() != 2 || grad_y.dim(0) != t_dim || grad_y.dim(1) != 2 * h) {
    throw std::invalid_argument("bigru_backward: grad_y must be [T, 2H]");
  }

  Tensor grad_fwd({t_dim, h});
  Tensor grad_bwd_rev({t_dim, h});  // indexed in the reversed run's time
  for (int t = 0; t < t_dim; ++t) {
    std::copy_n(&grad_y.at(t, 0), h, &grad_fwd.at(t, 0));
    std::copy_n(&grad_y.at(t, h), h, &grad_bwd_rev.at(t_dim - 1 - t, 0));
  }

  gru_backward(x, *w.w_ih_f, *w.w_hh_f, cache.fwd, grad_fwd, grad_x, *grads.w_ih_f, *grads.w_hh_f,
               *grads.b_ih_f, *grads.b_hh_f);

  Tensor x_rev = reverse_time(x);
  Tensor grad_x_rev({t_dim, x.dim(1)});
  gru_backward(x_rev, *w.w_ih_b, *w.w_hh_b, cache.bwd, grad_bwd_rev, grad_x_rev, *grads.w_ih_b,
               *grads.w_hh_b, *grads.b_ih_b, *grads.b_hh_b);
  for (int t = 0; t < t_dim; ++t) {
    const double* src = &grad_x_rev.at(t, 0);
    double* dst = &grad_x.at(t_dim - 1 - t, 0);
    for (int j = 0; j < x.dim(1); ++j) dst[j] += src[j];
  }
}

}  // namespace osd::nn
