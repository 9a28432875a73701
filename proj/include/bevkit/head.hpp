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
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "bevkit/box.hpp"
#include "bevkit/common.hpp"
#include "bevkit/tensor.hpp"
#include "bevkit/view_transform.hpp"

// Center-based detection codec over the BEV grid. Raster layout per cell:
// class heatmap in [0,1], (dx, dy) cell-fraction offsets, center z, natural
// log dims, (sin yaw, cos yaw), (vx, vy). Encoding stamps a clamped-radius
// Gaussian peak of exactly 1 at each box's center cell; decoding picks 3x3
// local maxima above a score threshold.

namespace bevkit::head {

using view_transform::BevGrid;

struct HeadRaster {
  Tensor3 heatmap;   // (K, nx, ny) in [0, 1]
  Tensor3 offset;    // (2, nx, ny) cell fractions
  Tensor3 z;         // (1, nx, ny) meters
  Tensor3 log_dims;  // (3, nx, ny) ln meters
  Tensor3 rot;       // (2, nx, ny) (sin yaw, cos yaw)
  Tensor3 vel;       // (2, nx, ny) m/s
};

inline HeadRaster make_raster(std::size_t num_classes, std::size_t nx, std::size_t ny) {
  HeadRaster r;
  r.heatmap = Tensor3(num_classes, nx, ny);
  r.offset = Tensor3(2, nx, ny);
  r.z = Tensor3(1, nx, ny);
  r.log_dims = Tensor3(3, nx, ny);
  r.rot = Tensor3(2, nx, ny);
  r.rot.data.assign(r.rot.size(), 0.0);
  for (std::size_t i = 0; i < nx * ny; ++i) r.rot.data[nx * ny + i] = 1.0;  // cos = 1 default
  r.vel = Tensor3(2, nx, ny);
  return r;
}

namespace detail {

/// Radius (cells) such that a peak displaced by it still overlaps the box
/// footprint by min_overlap; the usual three-case quadratic bound.
inline double gaussian_radius(double height, double width, double min_overlap) {
  const double a1 = 1.0, b1 = height + width;
  const double c1 = width * height * (1.0 - min_overlap) / (1.0 + min_overlap);
  const double r1 = (b1 + std::sqrt(std::max(0.0, b1 * b1 - 4.0 * a1 * c1))) / 2.0;

  const double a2 = 4.0, b2 = 2.0 * (height + width);
  const double c2 = (1.0 - min_overlap) * width * height;
  const double r2 = (b2 + std::sqrt(std::max(0.0, b2 * b2 - 4.0 * a2 * c2))) / (2.0 * a2);

  const double a3 = 4.0 * min_overlap, b3 = -2.0 * min_overlap * (height + width);
  const double c3 = (min_overlap - 1.0) * width * height;
  const double r3 = (b3 + std::sqrt(std::max(0.0, b3 * b3 - 4.0 * a3 * c3))) / (2.0 * a3);

  return std::min({r1, r2, r3});
}

}  // namespace detail

struct EncodeResult {
  HeadRaster raster;
  int skipped = 0;  // boxes outside the grid
};

/// Rasterize ground-truth boxes into training-style targets. Heatmaps are
/// max-combined across boxes; the regression planes are written at each
/// box's peak cell (a later colliding box overwrites them).
inline EncodeResult encode_targets(const DetectionSet& boxes, const BevGrid& grid,
                                   std::size_t num_classes, int gaussian_min_radius = 2,
                                   double gaussian_overlap = 0.1) {
  grid.validate();
  const std::size_t nx = grid.nx(), ny = grid.ny();
  EncodeResult result;
  result.raster = make_raster(num_classes, nx, ny);
  HeadRaster& r = result.raster;

  for (const Box3D& b : boxes) {
    b.validate();
    if (b.class_id < 0 || static_cast<std::size_t>(b.class_id) >= num_classes)
      throw std::invalid_argument("encode_targets: class_id out of range");
    const double fx = (b.center.x() - grid.x_min) / grid.cell;
    const double fy = (b.center.y() - grid.y_min) / grid.cell;
    const auto cx = static_cast<std::int64_t>(std::floor(fx));
    const auto cy = static_cast<std::int64_t>(std::floor(fy));
    if (cx < 0 || cy < 0 || cx >= static_cast<std::int64_t>(nx) ||
        cy >= static_cast<std::int64_t>(ny)) {
      ++result.skipped;
      continue;
    }

    const double w_cells = b.dims.x() / grid.cell;
    const double l_cells = b.dims.y() / grid.cell;
    const int radius = std::max(gaussian_min_radius,
                                static_cast<int>(detail::gaussian_radius(l_cells, w_cells,
                                                                         gaussian_overlap)));
    const double sigma = (2.0 * radius + 1.0) / 6.0;
    const auto cls = static_cast<std::size_t>(b.class_id);
    for (std::int64_t du = -radius; du <= radius; ++du) {
      const std::int64_t u = cx + du;
      if (u < 0 || u >= static_cast<std::int64_t>(nx)) continue;
      for (std::int64_t dv = -radius; dv <= radius; ++dv) {
        const std::int64_t v = cy + dv;
        if (v < 0 || v >= static_cast<std::int64_t>(ny)) continue;
        const double g = std::exp(-(static_cast<double>(du * du + dv * dv)) /
                                  (2.0 * sigma * sigma));
        double& cellv = r.heatmap(cls, static_cast<std::size_t>(u), static_cast<std::size_t>(v));
        cellv = std::max(cellv, g);
      }
    }

    const auto ux = static_cast<std::size_t>(cx), uy = static_cast<std::size_t>(cy);
    r.offset(0, ux, uy) = fx - static_cast<double>(cx);
    r.offset(1, ux, uy) = fy - static_cast<double>(cy);
    r.z(0, ux, uy) = b.center.z();
    r.log_dims(0, ux, uy) = std::log(b.dims.x());
    r.log_dims(1, ux, uy) = std::log(b.dims.y());
    r.log_dims(2, ux, uy) = std::log(b.dims.z());
    r.rot(0, ux, uy) = std::sin(b.yaw);
    r.rot(1, ux, uy) = std::cos(b.yaw);
    r.vel(0, ux, uy) = b.velocity.x();
    r.vel(1, ux, uy) = b.velocity.y();
  }
  return result;
}

/// Peaks: cells whose heatmap value exceeds the threshold and is >= all 8
/// neighbors, per class; top max_dets by score. Attribute ids are not part
/// of the raster and decode as 0.
inline DetectionSet decode(const HeadRaster& raster, const BevGrid& grid, std::size_t max_dets = 500,
                           double score_thresh = 0.1) {
  grid.validate();
  const std::size_t nx = grid.nx(), ny = grid.ny();
  if (raster.heatmap.d1 != nx || raster.heatmap.d2 != ny)
    throw std::invalid_argument("decode: raster shape does not match grid");

  struct Peak {
    double score;
    std::size_t cls, ix, iy;
  };
  std::vector<Peak> peaks;
  for (std::size_t cls = 0; cls < raster.heatmap.d0; ++cls) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      for (std::size_t iy = 0; iy < ny; ++iy) {
        const double v = raster.heatmap(cls, ix, iy);
        if (!(v > score_thresh)) continue;
        bool is_peak = true;
        for (int du = -1; du <= 1 && is_peak; ++du) {
          for (int dv = -1; dv <= 1; ++dv) {
            if (du == 0 && dv == 0) continue;
            const std::int64_t u = static_cast<std::int64_t>(ix) + du;
            const std::int64_t v2 = static_cast<std::int64_t>(iy) + dv;
            if (u < 0 || v2 < 0 || u >= static_cast<std::int64_t>(nx) ||
                v2 >= static_cast<std::int64_t>(ny))
              continue;
            if (raster.heatmap(cls, static_cast<std::size_t>(u), static_cast<std::size_t>(v2)) > v) {
              is_peak = false;
              break;
            }
          }
        }
        if (is_peak) peaks.push_back({v, cls, ix, iy});
      }
    }
  }

  std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.cls != b.cls) return a.cls < b.cls;
    if (a.ix != b.ix) return a.ix < b.ix;
    return a.iy < b.iy;
  });
  if (peaks.size() > max_dets) peaks.resize(max_dets);

  DetectionSet dets;
  dets.reserve(peaks.size());
  for (const Peak& p : peaks) {
    Box3D b;
    b.center = Vec3(grid.x_min + (static_cast<double>(p.ix) + raster.offset(0, p.ix, p.iy)) * grid.cell,
                    grid.y_min + (static_cast<double>(p.iy) + raster.offset(1, p.ix, p.iy)) * grid.cell,
                    raster.z(0, p.ix, p.iy));
    b.dims = Vec3(std::exp(raster.log_dims(0, p.ix, p.iy)), std::exp(raster.log_dims(1, p.ix, p.iy)),
                  std::exp(raster.log_dims(2, p.ix, p.iy)));
    b.yaw = std::atan2(raster.rot(0, p.ix, p.iy), raster.rot(1, p.ix, p.iy));
    b.velocity = Vec2(raster.vel(0, p.ix, p.iy), raster.vel(1, p.ix, p.iy));
    b.class_id = static_cast<int>(p.cls);
    b.attribute_id = 0;
    b.score = std::clamp(p.score, 0.0, 1.0);
    dets.push_back(b);
  }
  return dets;
}

/// Greedy circle suppression: keep detections by descending score, dropping
/// any same-class detection whose ground-plane center lies within the class
/// radius of an already kept one. Equal scores keep input order.
inline DetectionSet nms_distance(const DetectionSet& dets, const std::map<int, double>& radius_by_class,
                                 double default_radius = 1.0) {
  if (default_radius <= 0.0) throw std::invalid_argument("nms_distance: radius must be positive");
  for (const auto& [cls, r] : radius_by_class)
    if (r <= 0.0) throw std::invalid_argument("nms_distance: radius must be positive");

  std::vector<std::size_t> order(dets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });

  DetectionSet kept;
  for (const std::size_t i : order) {
    const Box3D& cand = dets[i];
    const auto it = radius_by_class.find(cand.class_id);
    const double radius = it == radius_by_class.end() ? default_radius : it->second;
    bool suppressed = false;
    for (const Box3D& k : kept) {
      if (k.class_id != cand.class_id) continue;
      const double dx = k.center.x() - cand.center.x();
      const double dy = k.center.y() - cand.center.y();
      if (std::sqrt(dx * dx + dy * dy) < radius) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(cand);
  }
  return kept;
}

inline DetectionSet nms_distance(const DetectionSet& dets, double radius) {
  return nms_distance(dets, {}, radius);
}

}  // namespace bevkit::head
