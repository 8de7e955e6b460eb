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

#ifndef OSD_TENSOR_HPP
#define OSD_TENSOR_HPP

#include <cassert>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <vector>

namespace osd {

// Dense row-major double tensor. Rank is dynamic but stays small (<= 4).
struct Tensor {
  std::vector<int> shape;
  std::vector<double> v;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    v.assign(num_elements(shape), 0.0);
  }
  Tensor(std::vector<int> s, std::vector<double> values)
      : shape(std::move(s)), v(std::move(values)) {
    assert(v.size() == num_elements(shape));
  }

  static size_t num_elements(const std::vector<int>& s) {
    size_t n = 1;
    for (int d : s) n *= static_cast<size_t>(d);
    return n;
  }

  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }

  size_t size() const { return v.size(); }
  int rank() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[static_cast<size_t>(i)]; }

  double* data() { return v.data(); }
  const double* data() const { return v.data(); }

  double& at(int i) { return v[static_cast<size_t>(i)]; }
  const double& at(int i) const { return v[static_cast<size_t>(i)]; }
  double& at(int i, int j) { return v[static_cast<size_t>(i) * dim(1) + j]; }
  const double& at(int i, int j) const { return v[static_cast<size_t>(i) * dim(1) + j]; }
  double& at(int i, int j, int k) {
    return v[(static_cast<size_t>(i) * dim(1) + j) * dim(2) + k];
  }
  const double& at(int i, int j, int k) const {
    return v[(static_cast<size_t>(i) * dim(1) + j) * dim(2) + k];
  }
  double& at(int i, int j, int k, int l) {
    return v[((static_cast<size_t>(i) * dim(1) + j) * dim(2) + k) * dim(3) + l];
  }
  const double& at(int i, int j, int k, int l) const {
    return v[((static_cast<size_t>(i) * dim(1) + j) * dim(2) + k) * dim(3) + l];
  }

  void fill(double value) { std::fill(v.begin(), v.end(), value); }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }
};

}  // namespace osd

#endif  // OSD_TENSOR_HPP
