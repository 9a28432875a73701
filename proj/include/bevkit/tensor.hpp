// Copyright 2026 The bevkit Authors
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

#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

namespace bevkit {

/// Dense row-major 2D array of doubles. Small by design; Eigen covers the
/// 3x3 linear algebra, this covers rasters.
struct Tensor2 {
  std::size_t d0 = 0, d1 = 0;
  std::vector<double> data;

  Tensor2() = default;
  Tensor2(std::size_t n0, std::size_t n1, double fill = 0.0)
      : d0(n0), d1(n1), data(n0 * n1, fill) {}

  double& operator()(std::size_t i, std::size_t j) {
    assert(i < d0 && j < d1);
    return data[i * d1 + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    assert(i < d0 && j < d1);
    return data[i * d1 + j];
  }

  std::size_t size() const { return data.size(); }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  double sum() const {
    double s = 0.0;
    for (double v : data) s += v;
    return s;
  }
};

/// Dense row-major 3D array of doubles (outermost axis first).
struct Tensor3 {
  std::size_t d0 = 0, d1 = 0, d2 = 0;
  std::vector<double> data;

  Tensor3() = default;
  Tensor3(std::size_t n0, std::size_t n1, std::size_t n2, double fill = 0.0)
      : d0(n0), d1(n1), d2(n2), data(n0 * n1 * n2, fill) {}

  double& operator()(std::size_t i, std::size_t j, std::size_t k) {
    assert(i < d0 && j < d1 && k < d2);
    return data[(i * d1 + j) * d2 + k];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    assert(i < d0 && j < d1 && k < d2);
    return data[(i * d1 + j) * d2 + k];
  }

  std::size_t size() const { return data.size(); }

  bool same_shape(const Tensor3& o) const {
    return d0 == o.d0 && d1 == o.d1 && d2 == o.d2;
  }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  double sum() const {
    double s = 0.0;
    for (double v : data) s += v;
    return s;
  }
};

}  // namespace bevkit
