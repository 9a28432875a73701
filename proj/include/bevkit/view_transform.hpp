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
#include <numeric>
#include <stdexcept>
#include <thread>
#include <vector>

#include "bevkit/common.hpp"
#include "bevkit/geometry.hpp"
#include "bevkit/tensor.hpp"

// Image view -> BEV. A per-pixel categorical depth distribution lifts each
// feature column into a weighted point set along its ray; the points are
// splatted into ground-plane pillars by sum pooling. Two splat kernels are
// provided: a brute-force reference and a sort-based segment-sum kernel that
// must agree with it to 1e-6 per cell.

namespace bevkit::view_transform {

using geometry::AugTransform2D;
using geometry::CameraIntrinsics;
using geometry::Pose3D;

/// Uniform depth discretization [d_min, d_max) with the given step; bin k
/// spans [d_min + k*step, d_min + (k+1)*step).
struct DepthBins {
  double d_min = 1.0;
  double d_max = 60.0;
  double step = 1.0;

  DepthBins() = default;
  DepthBins(double lo, double hi, double s) : d_min(lo), d_max(hi), step(s) {
    if (!(d_min > 0.0)) throw std::invalid_argument("DepthBins: d_min must be positive");
    if (!(step > 0.0)) throw std::invalid_argument("DepthBins: step must be positive");
    if (count() < 1) throw std::invalid_argument("DepthBins: at least one bin required");
  }

  std::size_t count() const {
    return static_cast<std::size_t>(std::llround((d_max - d_min) / step));
  }

  double bin_center(std::size_t k) const { return d_min + (static_cast<double>(k) + 0.5) * step; }

  /// Index of the bin containing depth d, or -1 when outside [d_min, d_max).
  std::int64_t bin_of(double d) const {
    if (!(d >= d_min) || d >= d_max) return -1;
    const auto k = static_cast<std::int64_t>(std::floor((d - d_min) / step));
    return std::clamp<std::int64_t>(k, 0, static_cast<std::int64_t>(count()) - 1);
  }
};

/// C x H x W feature tensor at 1/stride input resolution.
struct FeatureMap {
  Tensor3 data;     // (C, H, W)
  int stride = 16;  // input pixels per feature cell
};

/// D x H x W per-pixel depth classification scores.
struct DepthLogits {
  Tensor3 data;  // (D, H, W)
};

/// Lifted per-pixel content: softmax depth weights plus the (unweighted)
/// feature columns they multiply. The outer product weights[k]*features[c] is
/// formed lazily at splat time.
struct LiftedImage {
  Tensor3 features;  // (C, H, W)
  Tensor3 weights;   // (D, H, W); sums to 1 over D per pixel
  int stride = 16;
};

/// The lifted point set of one or more cameras, ego frame.
struct PointFeatureCloud {
  std::vector<Vec3> positions;   // N
  std::vector<double> features;  // N x C, row-major
  std::vector<double> weights;   // N, in [0, 1]
  std::size_t channels = 0;

  std::size_t size() const { return positions.size(); }

  void append(const PointFeatureCloud& o) {
    if (channels == 0 && size() == 0) channels = o.channels;
    if (o.channels != channels)
      throw std::invalid_argument("PointFeatureCloud: channel mismatch on append");
    positions.insert(positions.end(), o.positions.begin(), o.positions.end());
    features.insert(features.end(), o.features.begin(), o.features.end());
    weights.insert(weights.end(), o.weights.begin(), o.weights.end());
  }
};

/// Square-celled ground-plane ROI plus the vertical acceptance window.
/// Cells are half-open [edge, edge + cell); points at the max edge drop out.
struct BevGrid {
  double x_min = -51.2, x_max = 51.2;
  double y_min = -51.2, y_max = 51.2;
  double cell = 0.8;
  double z_min = -5.0, z_max = 3.0;

  std::size_t nx() const { return checked_cells(x_max - x_min, "x"); }
  std::size_t ny() const { return checked_cells(y_max - y_min, "y"); }

  void validate() const {
    if (!(cell > 0.0)) throw std::invalid_argument("BevGrid: cell size must be positive");
    if (!(x_max > x_min) || !(y_max > y_min) || !(z_max > z_min))
      throw std::invalid_argument("BevGrid: degenerate extents");
    (void)nx();
    (void)ny();
  }

  bool centered() const {
    return std::abs(x_min + x_max) < 1e-9 && std::abs(y_min + y_max) < 1e-9;
  }

  Vec2 cell_center(std::size_t ix, std::size_t iy) const {
    return {x_min + (static_cast<double>(ix) + 0.5) * cell,
            y_min + (static_cast<double>(iy) + 0.5) * cell};
  }

  /// Cell index of a ground-plane position, or -1 when outside the ROI.
  std::int64_t cell_index(double x, double y) const {
    const double fx = (x - x_min) / cell;
    const double fy = (y - y_min) / cell;
    const auto ix = static_cast<std::int64_t>(std::floor(fx));
    const auto iy = static_cast<std::int64_t>(std::floor(fy));
    const auto nxv = static_cast<std::int64_t>(nx()), nyv = static_cast<std::int64_t>(ny());
    if (ix < 0 || ix >= nxv || iy < 0 || iy >= nyv) return -1;
    return ix * nyv + iy;
  }

  /// Same mapping with the derived bounds precomputed, for per-point loops.
  struct CellIndexer {
    double x_min, y_min, cell, z_min, z_max;
    std::int64_t nx, ny;

    std::int64_t cell_of(const Vec3& p) const {
      if (p.z() < z_min || p.z() > z_max) return -1;
      const auto ix = static_cast<std::int64_t>(std::floor((p.x() - x_min) / cell));
      const auto iy = static_cast<std::int64_t>(std::floor((p.y() - y_min) / cell));
      if (ix < 0 || ix >= nx || iy < 0 || iy >= ny) return -1;
      return ix * ny + iy;
    }
  };

  CellIndexer indexer() const {
    return {x_min, y_min, cell, z_min, z_max, static_cast<std::int64_t>(nx()),
            static_cast<std::int64_t>(ny())};
  }

 private:
  std::size_t checked_cells(double extent, const char* axis) const {
    const double n = extent / cell;
    const double r = std::round(n);
    if (std::abs(n - r) > 1e-9 || r < 1.0)
      throw std::invalid_argument(std::string("BevGrid: extent along ") + axis +
                                  " is not an integer number of cells");
    return static_cast<std::size_t>(r);
  }
};

/// C x nx x ny BEV raster over a grid.
struct BevFeature {
  Tensor3 data;  // (C, nx, ny)
};

/// The fixed (pixel, depth) sample lattice shared by every camera:
/// entry (k, i, j) sits at pixel ((j+0.5)*stride, (i+0.5)*stride) and depth
/// d_min + (k+0.5)*step.
struct Frustum {
  std::size_t depth_count = 0, height = 0, width = 0;
  std::vector<Vec3> lattice;  // (x_pixel, y_pixel, depth), k-major then i, j

  const Vec3& at(std::size_t k, std::size_t i, std::size_t j) const {
    return lattice[(k * height + i) * width + j];
  }
};

inline Frustum build_frustum(const DepthBins& bins, std::size_t height, std::size_t width,
                             int stride) {
  if (stride < 1) throw std::invalid_argument("build_frustum: stride must be >= 1");
  Frustum f;
  f.depth_count = bins.count();
  f.height = height;
  f.width = width;
  f.lattice.resize(f.depth_count * height * width);
  std::size_t n = 0;
  for (std::size_t k = 0; k < f.depth_count; ++k) {
    const double d = bins.bin_center(k);
    for (std::size_t i = 0; i < height; ++i) {
      const double y = (static_cast<double>(i) + 0.5) * stride;
      for (std::size_t j = 0; j < width; ++j) {
        const double x = (static_cast<double>(j) + 0.5) * stride;
        f.lattice[n++] = Vec3(x, y, d);
      }
    }
  }
  return f;
}

/// Per-pixel softmax over the depth axis; the lifted feature at bin k is
/// weights[k] * features[:], kept factorized.
inline LiftedImage lift(const FeatureMap& fm, const DepthLogits& logits) {
  const Tensor3& l = logits.data;
  if (l.d1 != fm.data.d1 || l.d2 != fm.data.d2)
    throw std::invalid_argument("lift: feature map and logits disagree on H x W");
  if (!l.all_finite()) throw std::invalid_argument("lift: non-finite logits");
  if (!fm.data.all_finite()) throw std::invalid_argument("lift: non-finite features");

  LiftedImage out;
  out.features = fm.data;
  out.stride = fm.stride;
  out.weights = Tensor3(l.d0, l.d1, l.d2);
  for (std::size_t i = 0; i < l.d1; ++i) {
    for (std::size_t j = 0; j < l.d2; ++j) {
      double peak = -1e300;
      for (std::size_t k = 0; k < l.d0; ++k) peak = std::max(peak, l(k, i, j));
      double denom = 0.0;
      for (std::size_t k = 0; k < l.d0; ++k) {
        const double e = std::exp(l(k, i, j) - peak);
        out.weights(k, i, j) = e;
        denom += e;
      }
      for (std::size_t k = 0; k < l.d0; ++k) out.weights(k, i, j) /= denom;
    }
  }
  return out;
}

/// Unproject every frustum entry through the augmentation-aware chain
/// (A^-1, then K^-1, then the ego-from-camera pose) and attach the pixel's
/// feature column and depth weight to each point.
inline PointFeatureCloud render_points(const LiftedImage& lifted, const Frustum& frustum,
                                       const CameraIntrinsics& k_mat, const Pose3D& pose,
                                       const AugTransform2D& aug) {
  const std::size_t channels = lifted.features.d0;
  if (frustum.depth_count != lifted.weights.d0 || frustum.height != lifted.weights.d1 ||
      frustum.width != lifted.weights.d2)
    throw std::invalid_argument("render_points: frustum and lifted image disagree on shape");

  // Fold A^-1 and K^-1 into one matrix; depth scales the homogeneous pixel
  // only, exactly as in the two-step chain.
  const Mat3 unproject = k_mat.inverse() * aug.inverse();
  const Mat3& rot = pose.rotation();
  const Vec3& trans = pose.translation();

  PointFeatureCloud cloud;
  cloud.channels = channels;
  const std::size_t n = frustum.lattice.size();
  cloud.positions.resize(n);
  cloud.weights.resize(n);
  cloud.features.resize(n * channels);

  std::size_t idx = 0;
  for (std::size_t k = 0; k < frustum.depth_count; ++k) {
    for (std::size_t i = 0; i < frustum.height; ++i) {
      for (std::size_t j = 0; j < frustum.width; ++j, ++idx) {
        const Vec3& entry = frustum.at(k, i, j);
        const Vec3 cam = unproject * (Vec3(entry.x(), entry.y(), 1.0) * entry.z());
        cloud.positions[idx] = rot * cam + trans;
        cloud.weights[idx] = lifted.weights(k, i, j);
        double* dst = cloud.features.data() + idx * channels;
        for (std::size_t c = 0; c < channels; ++c) dst[c] = lifted.features(c, i, j);
      }
    }
  }
  return cloud;
}

/// Reference pillar pooling: one pass over the points, each in-ROI point adds
/// weight * feature into its cell. The oracle the optimized kernel is held to.
inline BevFeature splat_naive(const PointFeatureCloud& cloud, const BevGrid& grid) {
  grid.validate();
  const std::size_t c = std::max<std::size_t>(cloud.channels, 1);
  BevFeature out;
  out.data = Tensor3(c, grid.nx(), grid.ny());
  const BevGrid::CellIndexer idx = grid.indexer();
  const std::size_t plane = grid.nx() * grid.ny();
  for (std::size_t p = 0; p < cloud.size(); ++p) {
    const Vec3& pos = cloud.positions[p];
    if (!pos.allFinite() || !std::isfinite(cloud.weights[p]))
      throw std::invalid_argument("splat_naive: non-finite point");
    const std::int64_t cell = idx.cell_of(pos);
    if (cell < 0) continue;
    const double w = cloud.weights[p];
    const double* f = cloud.features.data() + p * cloud.channels;
    double* dst = out.data.data.data() + static_cast<std::size_t>(cell);
    for (std::size_t ch = 0; ch < cloud.channels; ++ch) dst[ch * plane] += w * f[ch];
  }
  return out;
}

namespace detail {

/// Stable counting sort of point indices by linearized cell id. In-ROI
/// points only. Both passes parallelize over contiguous point ranges with
/// per-worker histograms; the resulting permutation is the same for every
/// worker count.
struct SortedCells {
  std::vector<std::uint32_t> point_of_slot;  // in-ROI points, cell-major, original order within
  std::vector<std::size_t> segment_starts;   // slot offsets of distinct-cell runs, + end sentinel
  std::vector<std::uint32_t> segment_cells;  // cell id per segment
};

inline SortedCells sort_by_cell(const PointFeatureCloud& cloud, const BevGrid& grid,
                                std::size_t workers) {
  const std::size_t n_cells = grid.nx() * grid.ny();
  const std::size_t n = cloud.size();
  if (n_cells > 0x7fffffffull || n > 0xffffffffull)
    throw std::invalid_argument("splat_sorted: grid or cloud exceeds the 32-bit index layout");
  workers = std::max<std::size_t>(1, std::min(workers, n / 65536 + 1));
  const BevGrid::CellIndexer idx = grid.indexer();

  std::vector<std::int32_t> cell_of_point(n);
  std::vector<std::vector<std::uint32_t>> counts(workers,
                                                 std::vector<std::uint32_t>(n_cells, 0));
  std::vector<std::uint8_t> bad(workers, 0);

  auto pass1 = [&](std::size_t w, std::size_t begin, std::size_t end) {
    auto& local = counts[w];
    for (std::size_t p = begin; p < end; ++p) {
      const Vec3& pos = cloud.positions[p];
      if (!pos.allFinite() || !std::isfinite(cloud.weights[p])) {
        bad[w] = 1;
        return;
      }
      const std::int64_t cell = idx.cell_of(pos);
      cell_of_point[p] = static_cast<std::int32_t>(cell);
      if (cell >= 0) ++local[static_cast<std::size_t>(cell)];
    }
  };

  auto run_ranges = [&](auto&& fn) {
    if (workers == 1) {
      fn(std::size_t{0}, std::size_t{0}, n);
      return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back(fn, w, n * w / workers, n * (w + 1) / workers);
    for (auto& t : pool) t.join();
  };

  run_ranges(pass1);
  for (std::size_t w = 0; w < workers; ++w)
    if (bad[w]) throw std::invalid_argument("splat_sorted: non-finite point");

  // exclusive scan over (cell, worker): gives each worker its stable start
  // slot per cell, and the segment table as a byproduct
  SortedCells s;
  s.segment_starts.reserve(1024);
  s.segment_cells.reserve(1024);
  std::uint32_t running = 0;
  for (std::size_t c = 0; c < n_cells; ++c) {
    std::uint32_t cell_total = 0;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::uint32_t v = counts[w][c];
      counts[w][c] = running + cell_total;
      cell_total += v;
    }
    if (cell_total > 0) {
      s.segment_starts.push_back(running);
      s.segment_cells.push_back(static_cast<std::uint32_t>(c));
    }
    running += cell_total;
  }
  s.segment_starts.push_back(running);
  s.point_of_slot.resize(running);

  auto pass2 = [&](std::size_t w, std::size_t begin, std::size_t end) {
    auto& cursor = counts[w];
    for (std::size_t p = begin; p < end; ++p) {
      const std::int32_t cell = cell_of_point[p];
      if (cell < 0) continue;
      s.point_of_slot[cursor[static_cast<std::size_t>(cell)]++] = static_cast<std::uint32_t>(p);
    }
  };
  run_ranges(pass2);
  return s;
}

}  // namespace detail

/// Optimized pillar pooling: counting-sort points by cell id (stable, so each
/// cell accumulates in original point order), then segment-sum contiguous
/// runs. Workers own disjoint segment ranges, so the accumulation order per
/// cell never depends on the worker count: output is bitwise-deterministic
/// for a fixed input ordering and agrees with splat_naive within 1e-6 per
/// cell. jobs = 0 uses the hardware concurrency.
inline BevFeature splat_sorted(const PointFeatureCloud& cloud, const BevGrid& grid, int jobs = 0) {
  grid.validate();
  const std::size_t channels = std::max<std::size_t>(cloud.channels, 1);
  BevFeature out;
  out.data = Tensor3(channels, grid.nx(), grid.ny());
  if (cloud.size() == 0) return out;

  const std::size_t max_workers = jobs > 0 ? static_cast<std::size_t>(jobs)
                                           : std::max(1u, std::thread::hardware_concurrency());
  const detail::SortedCells s = detail::sort_by_cell(cloud, grid, max_workers);
  const std::size_t plane = grid.nx() * grid.ny();
  const std::size_t n_segments = s.segment_cells.size();

  auto sum_segments = [&](std::size_t seg_begin, std::size_t seg_end) {
    std::vector<double> acc(channels);
    for (std::size_t seg = seg_begin; seg < seg_end; ++seg) {
      const std::size_t begin = s.segment_starts[seg];
      const std::size_t end = s.segment_starts[seg + 1];
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t slot = begin; slot < end; ++slot) {
        const std::size_t p = s.point_of_slot[slot];
        const double w = cloud.weights[p];
        const double* f = cloud.features.data() + p * cloud.channels;
        for (std::size_t ch = 0; ch < cloud.channels; ++ch) acc[ch] += w * f[ch];
      }
      const std::size_t cell = s.segment_cells[seg];
      for (std::size_t ch = 0; ch < channels; ++ch) out.data.data[ch * plane + cell] = acc[ch];
    }
  };

  std::size_t workers = std::min(max_workers, std::max<std::size_t>(1, n_segments / 64));
  if (workers <= 1 || s.point_of_slot.size() < 16384) {
    sum_segments(0, n_segments);
    return out;
  }

  // balance by slots, split on segment boundaries; each worker owns whole
  // cells, so the per-cell accumulation order never changes
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::size_t seg_cursor = 0;
  for (std::size_t w = 0; w < workers && seg_cursor < n_segments; ++w) {
    const std::size_t target_slots = (s.point_of_slot.size() * (w + 1)) / workers;
    std::size_t seg_end = seg_cursor;
    while (seg_end < n_segments && s.segment_starts[seg_end] < target_slots) ++seg_end;
    if (w + 1 == workers) seg_end = n_segments;
    pool.emplace_back(sum_segments, seg_cursor, seg_end);
    seg_cursor = seg_end;
  }
  for (auto& t : pool) t.join();
  return out;
}

/// One camera's contribution to the BEV: features, depth logits, calibration,
/// and the image augmentation that produced the features.
struct CameraInput {
  FeatureMap features;
  DepthLogits logits;
  CameraIntrinsics intrinsics;
  Pose3D pose;
  AugTransform2D aug = AugTransform2D::identity();
};

/// Full view transformation: lift every camera, render its point cloud, and
/// splat the union into one BEV feature (sum pooling makes the per-camera
/// order irrelevant up to floating-point association).
inline BevFeature view_transform(const std::vector<CameraInput>& cameras, const BevGrid& grid,
                                 const DepthBins& bins) {
  if (cameras.empty()) throw ConfigError("view_transform: at least one camera required");
  grid.validate();

  BevFeature total;
  bool first = true;
  for (const CameraInput& cam : cameras) {
    const Tensor3& fm = cam.features.data;
    const Frustum frustum = build_frustum(bins, fm.d1, fm.d2, cam.features.stride);
    const LiftedImage lifted = lift(cam.features, cam.logits);
    const PointFeatureCloud cloud = render_points(lifted, frustum, cam.intrinsics, cam.pose, cam.aug);
    BevFeature part = splat_sorted(cloud, grid);
    if (first) {
      total = std::move(part);
      first = false;
    } else {
      if (!total.data.same_shape(part.data))
        throw ConfigError("view_transform: cameras disagree on channel count");
      for (std::size_t i = 0; i < total.data.size(); ++i) total.data.data[i] += part.data.data[i];
    }
  }
  return total;
}

}  // namespace bevkit::view_transform
