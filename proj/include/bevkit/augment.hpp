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

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "bevkit/box.hpp"
#include "bevkit/common.hpp"
#include "bevkit/geometry.hpp"
#include "bevkit/rng.hpp"
#include "bevkit/tensor.hpp"
#include "bevkit/view_transform.hpp"

// Two augmentation spaces, deliberately decoupled:
//   - image-view augmentation (flip/scale/rotate/crop) acts on camera inputs
//     and is undone during unprojection, so it never touches 3D targets;
//   - BEV-space augmentation (flip/rotate/scale on the ground plane) acts
//     jointly on the BEV feature raster and the box targets.
// Samplers draw from explicit SeedStreams; nothing here holds mutable state.

namespace bevkit::augment {

using geometry::AugOp;
using geometry::AugTransform2D;
using geometry::CropOp;
using geometry::FlipOp;
using geometry::RotateOp;
using geometry::ScaleOp;
using view_transform::BevFeature;
using view_transform::BevGrid;

enum class CropHorizontalMode { kRandom, kCenter };
enum class CropVerticalMode { kFixed, kBottom, kRandom };

/// Resampling filter for the raster warps. Nearest keeps the axis-aligned
/// exactness the oracle tests rely on; bilinear is available for smoother
/// synthetic imagery but stays out of any exactness contract.
enum class Interp { kNearest, kBilinear };

/// Image-view augmentation ranges. Defaults follow the standard recipe for
/// 1600x900 source images cropped to 704x256.
struct IdaConfig {
  double flip_prob = 0.5;
  double scale_min = 0.386, scale_max = 0.55;
  double rot_min_rad = deg_to_rad(-5.4), rot_max_rad = deg_to_rad(5.4);
  int crop_w = 704, crop_h = 256;
  int source_w = 1600, source_h = 900;
  CropHorizontalMode crop_horizontal_mode = CropHorizontalMode::kRandom;
  CropVerticalMode crop_vertical_mode = CropVerticalMode::kFixed;
  Interp interp = Interp::kNearest;

  void validate() const {
    if (!(flip_prob >= 0.0 && flip_prob <= 1.0))
      throw ConfigError("ida: flip_prob must lie in [0, 1]");
    if (!(scale_min > 0.0) || scale_max < scale_min)
      throw ConfigError("ida: scale range must be ordered and positive");
    if (rot_max_rad < rot_min_rad) throw ConfigError("ida: rotation range must be ordered");
    if (crop_w < 1 || crop_h < 1) throw ConfigError("ida: crop size must be positive");
    if (crop_w > source_w || crop_h > source_h)
      throw ConfigError("ida: crop must fit in the source image");
  }
};

/// BEV-space augmentation ranges.
struct BdaConfig {
  double flip_prob = 0.5;  // applied independently to the x and y axes
  double rot_min_rad = deg_to_rad(-22.5), rot_max_rad = deg_to_rad(22.5);
  double scale_min = 0.95, scale_max = 1.05;
  Interp interp = Interp::kNearest;

  void validate() const {
    if (!(flip_prob >= 0.0 && flip_prob <= 1.0))
      throw ConfigError("bda: flip_prob must lie in [0, 1]");
    if (rot_max_rad < rot_min_rad) throw ConfigError("bda: rotation range must be ordered");
    if (!(scale_min > 0.0) || scale_max < scale_min)
      throw ConfigError("bda: scale range must be ordered and positive");
  }
};

/// Ground-plane transform applied jointly to BEV features and box targets:
/// M = scale * R(theta) * F, with F the axis flips.
struct BdaTransform {
  bool flip_x = false;  // negates the x coordinate
  bool flip_y = false;  // negates the y coordinate
  double rotation_rad = 0.0;
  double scale = 1.0;

  Mat2 matrix() const {
    const double c = std::cos(rotation_rad), s = std::sin(rotation_rad);
    Mat2 r;
    r << c, -s, s, c;
    Mat2 f = Mat2::Identity();
    if (flip_x) f(0, 0) = -1.0;
    if (flip_y) f(1, 1) = -1.0;
    return scale * r * f;
  }

  bool is_identity_params() const {
    return !flip_x && !flip_y && rotation_rad == 0.0 && scale == 1.0;
  }

  /// Exact group inverse, again expressed as scale * R * F. Conjugating a
  /// rotation through a single-axis flip negates its angle, hence the sign
  /// rule below.
  BdaTransform inverse() const {
    BdaTransform inv;
    inv.flip_x = flip_x;
    inv.flip_y = flip_y;
    const bool odd_flip = flip_x != flip_y;
    inv.rotation_rad = odd_flip ? rotation_rad : -rotation_rad;
    inv.scale = 1.0 / scale;
    return inv;
  }
};

/// Draw one image-view transform. The composed matrix applies, in order:
/// flip (about the source width), uniform scale, rotation about the crop
/// window center, crop translation. Crop offsets are integer pixels.
inline AugTransform2D sample_ida(const IdaConfig& cfg, SeedStream& stream) {
  cfg.validate();
  const bool flip = stream.bernoulli(cfg.flip_prob);
  const double scale = stream.uniform(cfg.scale_min, cfg.scale_max);
  const double rot = stream.uniform(cfg.rot_min_rad, cfg.rot_max_rad);

  const double scaled_w = scale * cfg.source_w;
  const double scaled_h = scale * cfg.source_h;

  double crop_x = 0.0;
  const double free_x = std::max(0.0, scaled_w - cfg.crop_w);
  switch (cfg.crop_horizontal_mode) {
    case CropHorizontalMode::kRandom:
      crop_x = static_cast<double>(
          stream.uniform_int(0, static_cast<std::int64_t>(std::floor(free_x))));
      break;
    case CropHorizontalMode::kCenter:
      crop_x = std::floor(free_x / 2.0);
      break;
  }

  double crop_y = 0.0;
  switch (cfg.crop_vertical_mode) {
    case CropVerticalMode::kFixed:
      crop_y = std::floor(std::max(0.0, scaled_h - cfg.crop_h));
      break;
    case CropVerticalMode::kBottom:
      crop_y = std::floor(scaled_h - cfg.crop_h);
      break;
    case CropVerticalMode::kRandom: {
      const double free_y = std::max(0.0, scaled_h - cfg.crop_h);
      crop_y = static_cast<double>(
          stream.uniform_int(0, static_cast<std::int64_t>(std::floor(free_y))));
      break;
    }
  }

  const Vec2 pivot(crop_x + (cfg.crop_w - 1.0) / 2.0, crop_y + (cfg.crop_h - 1.0) / 2.0);

  std::vector<AugOp> ops;
  if (flip) ops.push_back(FlipOp{static_cast<double>(cfg.source_w)});
  ops.push_back(ScaleOp{scale});
  ops.push_back(RotateOp{rot, pivot});
  ops.push_back(CropOp{Vec2(crop_x, crop_y)});
  return geometry::compose_aug(ops);
}

namespace detail {

/// Read one channel at a continuous source position; zero outside.
inline double sample_channel(const Tensor3& img_hwc, double x, double y, std::size_t c,
                             Interp interp) {
  const auto h = static_cast<std::int64_t>(img_hwc.d0);
  const auto w = static_cast<std::int64_t>(img_hwc.d1);
  if (interp == Interp::kNearest) {
    const auto sx = static_cast<std::int64_t>(std::floor(x + 0.5));
    const auto sy = static_cast<std::int64_t>(std::floor(y + 0.5));
    if (sx < 0 || sy < 0 || sx >= w || sy >= h) return 0.0;
    return img_hwc(static_cast<std::size_t>(sy), static_cast<std::size_t>(sx), c);
  }
  const auto x0 = static_cast<std::int64_t>(std::floor(x));
  const auto y0 = static_cast<std::int64_t>(std::floor(y));
  const double fx = x - static_cast<double>(x0);
  const double fy = y - static_cast<double>(y0);
  auto texel = [&](std::int64_t sx, std::int64_t sy) {
    if (sx < 0 || sy < 0 || sx >= w || sy >= h) return 0.0;
    return img_hwc(static_cast<std::size_t>(sy), static_cast<std::size_t>(sx), c);
  };
  return (1.0 - fy) * ((1.0 - fx) * texel(x0, y0) + fx * texel(x0 + 1, y0)) +
         fy * ((1.0 - fx) * texel(x0, y0 + 1) + fx * texel(x0 + 1, y0 + 1));
}

}  // namespace detail

/// Warp a raster: output(p) = input(A^-1 p), zero outside the source.
/// Channels ride along untouched.
inline Tensor3 apply_ida_image(const Tensor3& img_hwc, const AugTransform2D& aug,
                               std::size_t out_h, std::size_t out_w,
                               Interp interp = Interp::kNearest) {
  Tensor3 out(out_h, out_w, img_hwc.d2, 0.0);
  const Mat3& inv = aug.inverse();
  for (std::size_t y = 0; y < out_h; ++y) {
    for (std::size_t x = 0; x < out_w; ++x) {
      const Vec3 src = inv * Vec3(static_cast<double>(x), static_cast<double>(y), 1.0);
      for (std::size_t c = 0; c < img_hwc.d2; ++c)
        out(y, x, c) = detail::sample_channel(img_hwc, src.x(), src.y(), c, interp);
    }
  }
  return out;
}

inline Tensor2 apply_ida_raster(const Tensor2& img, const AugTransform2D& aug, std::size_t out_h,
                                std::size_t out_w, Interp interp = Interp::kNearest) {
  Tensor3 in3(img.d0, img.d1, 1);
  in3.data = img.data;
  const Tensor3 out3 = apply_ida_image(in3, aug, out_h, out_w, interp);
  Tensor2 out(out_h, out_w);
  out.data = out3.data;
  return out;
}

inline BdaTransform sample_bda(const BdaConfig& cfg, SeedStream& stream) {
  cfg.validate();
  BdaTransform t;
  t.flip_x = stream.bernoulli(cfg.flip_prob);
  t.flip_y = stream.bernoulli(cfg.flip_prob);
  t.rotation_rad = stream.uniform(cfg.rot_min_rad, cfg.rot_max_rad);
  t.scale = stream.uniform(cfg.scale_min, cfg.scale_max);
  return t;
}

/// Resample the BEV raster under the ground-plane transform: the output cell
/// at position q reads the input at M^-1 q (zero outside the grid). Rotation
/// requires a square grid centered at the origin so quarter turns stay
/// on-lattice.
inline BevFeature apply_bda_feature(const BevFeature& f, const BdaTransform& t,
                                    const BevGrid& grid, Interp interp = Interp::kNearest) {
  grid.validate();
  if (t.rotation_rad != 0.0 && (!grid.centered() || grid.nx() != grid.ny()))
    throw ConfigError("apply_bda_feature: rotation needs a square, origin-centered grid");
  const std::size_t nx = grid.nx(), ny = grid.ny();
  if (f.data.d1 != nx || f.data.d2 != ny)
    throw std::invalid_argument("apply_bda_feature: feature shape does not match grid");

  const Mat2 minv = t.matrix().inverse();
  BevFeature out;
  out.data = Tensor3(f.data.d0, nx, ny);
  for (std::size_t ix = 0; ix < nx; ++ix) {
    for (std::size_t iy = 0; iy < ny; ++iy) {
      const Vec2 q = grid.cell_center(ix, iy);
      const Vec2 src = minv * q;
      if (interp == Interp::kNearest) {
        const auto sx = static_cast<std::int64_t>(std::floor((src.x() - grid.x_min) / grid.cell));
        const auto sy = static_cast<std::int64_t>(std::floor((src.y() - grid.y_min) / grid.cell));
        if (sx < 0 || sy < 0 || sx >= static_cast<std::int64_t>(nx) ||
            sy >= static_cast<std::int64_t>(ny))
          continue;
        for (std::size_t c = 0; c < f.data.d0; ++c)
          out.data(c, ix, iy) =
              f.data(c, static_cast<std::size_t>(sx), static_cast<std::size_t>(sy));
      } else {
        // cell-center continuous coordinates
        const double u = (src.x() - grid.x_min) / grid.cell - 0.5;
        const double v = (src.y() - grid.y_min) / grid.cell - 0.5;
        const auto u0 = static_cast<std::int64_t>(std::floor(u));
        const auto v0 = static_cast<std::int64_t>(std::floor(v));
        const double fu = u - static_cast<double>(u0);
        const double fv = v - static_cast<double>(v0);
        for (std::size_t c = 0; c < f.data.d0; ++c) {
          auto texel = [&](std::int64_t sx, std::int64_t sy) {
            if (sx < 0 || sy < 0 || sx >= static_cast<std::int64_t>(nx) ||
                sy >= static_cast<std::int64_t>(ny))
              return 0.0;
            return f.data(c, static_cast<std::size_t>(sx), static_cast<std::size_t>(sy));
          };
          out.data(c, ix, iy) =
              (1.0 - fv) * ((1.0 - fu) * texel(u0, v0) + fu * texel(u0 + 1, v0)) +
              fv * ((1.0 - fu) * texel(u0, v0 + 1) + fu * texel(u0 + 1, v0 + 1));
        }
      }
    }
  }
  return out;
}

/// Transform box targets with the same ground-plane action: centers and
/// velocities through M, z and dims through the scale, yaw shifted by the
/// rotation and then reflected per flip axis (x-flip: yaw -> pi - yaw,
/// y-flip: yaw -> -yaw), wrapped to (-pi, pi].
inline DetectionSet apply_bda_boxes(const DetectionSet& boxes, const BdaTransform& t) {
  const Mat2 m = t.matrix();
  DetectionSet out;
  out.reserve(boxes.size());
  for (const Box3D& b : boxes) {
    Box3D n = b;
    const Vec2 c = m * Vec2(b.center.x(), b.center.y());
    n.center = Vec3(c.x(), c.y(), t.scale * b.center.z());
    n.dims = t.scale * b.dims;
    n.velocity = m * b.velocity;
    double yaw = b.yaw + t.rotation_rad;
    if (t.flip_x) yaw = kPi - yaw;
    if (t.flip_y) yaw = -yaw;
    n.yaw = wrap_angle(yaw);
    out.push_back(n);
  }
  return out;
}

}  // namespace bevkit::augment
