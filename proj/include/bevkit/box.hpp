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

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "bevkit/common.hpp"

namespace bevkit {

/// Ground-plane-oriented 3D box in the ego frame: detection target and
/// detection output alike (ground truth carries score 1.0).
struct Box3D {
  Vec3 center{0, 0, 0};       // meters, ego frame
  Vec3 dims{1, 1, 1};         // (w, l, h) meters
  double yaw = 0.0;           // radians in (-pi, pi]
  Vec2 velocity{0, 0};        // (vx, vy) m/s
  int class_id = 0;
  int attribute_id = 0;
  double score = 1.0;

  void validate() const {
    if (!(dims.x() > 0 && dims.y() > 0 && dims.z() > 0))
      throw std::invalid_argument("Box3D: dims must be positive");
    if (!(yaw > -kPi - 1e-12 && yaw <= kPi + 1e-12))
      throw std::invalid_argument("Box3D: yaw must lie in (-pi, pi]");
    if (!(score >= 0.0 && score <= 1.0))
      throw std::invalid_argument("Box3D: score must lie in [0, 1]");
    if (!center.allFinite() || !dims.allFinite() || !velocity.allFinite())
      throw std::invalid_argument("Box3D: non-finite field");
  }
};

using DetectionSet = std::vector<Box3D>;

/// Footprint corners (4 ground-plane points, counter-clockwise).
/// Heading (yaw) points along the length axis.
inline std::array<Vec2, 4> footprint_corners(const Box3D& b) {
  const double c = std::cos(b.yaw), s = std::sin(b.yaw);
  const double hl = 0.5 * b.dims.y(), hw = 0.5 * b.dims.x();
  const Vec2 fwd(c, s), left(-s, c);
  const Vec2 o(b.center.x(), b.center.y());
  return {o + fwd * hl + left * hw, o - fwd * hl + left * hw,
          o - fwd * hl - left * hw, o + fwd * hl - left * hw};
}

/// Exact rotated-rectangle overlap test via separating axes.
inline bool footprints_overlap(const Box3D& a, const Box3D& b) {
  const auto ca = footprint_corners(a), cb = footprint_corners(b);
  auto separated_on = [&](const Vec2& axis) {
    double amin = 1e300, amax = -1e300, bmin = 1e300, bmax = -1e300;
    for (const auto& p : ca) {
      const double d = p.dot(axis);
      amin = std::min(amin, d);
      amax = std::max(amax, d);
    }
    for (const auto& p : cb) {
      const double d = p.dot(axis);
      bmin = std::min(bmin, d);
      bmax = std::max(bmax, d);
    }
    return amax < bmin || bmax < amin;
  };
  for (int i = 0; i < 2; ++i) {
    const Vec2 ea = ca[i + 1] - ca[i];
    const Vec2 eb = cb[i + 1] - cb[i];
    if (separated_on(Vec2(-ea.y(), ea.x()))) return false;
    if (separated_on(Vec2(-eb.y(), eb.x()))) return false;
  }
  return true;
}

}  // namespace bevkit
