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
#include <cstdlib>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "bevkit/augment.hpp"
#include "bevkit/common.hpp"
#include "bevkit/config.hpp"
#include "bevkit/encoder.hpp"
#include "bevkit/geometry.hpp"
#include "bevkit/head.hpp"
#include "bevkit/metrics.hpp"
#include "bevkit/pipeline.hpp"
#include "bevkit/rng.hpp"
#include "bevkit/scenegen.hpp"
#include "bevkit/view_transform.hpp"

// Seeded, self-contained invariant suite. Every property the library
// guarantees is a named check here; `check` runs them all and failures name
// the invariant and the seed. The suite doubles as the bulk of the
// acceptance tests.

namespace bevkit::checks {

struct CheckOptions {
  std::uint64_t seed = 0;
  int trials = 100;
  // Mutation hook: runs the augmented-unprojection invariance check with A
  // applied instead of A^-1, which must make it fail. Test-only.
  bool corrupt_unprojection = false;
};

struct CheckResult {
  std::string name;
  bool pass = true;
  double worst = 0.0;        // worst observed metric (check-specific units)
  std::string detail;        // failure description, names the seed
};

namespace detail {

inline geometry::CameraIntrinsics random_intrinsics(SeedStream& s, double w = 1600, double h = 900) {
  const double fx = s.uniform(400.0, 1400.0);
  const double fy = s.uniform(400.0, 1400.0);
  const double cx = (w - 1.0) / 2.0 + s.uniform(-20.0, 20.0);
  const double cy = (h - 1.0) / 2.0 + s.uniform(-20.0, 20.0);
  return geometry::CameraIntrinsics::from_pinhole(fx, fy, cx, cy);
}

inline double vec_rel_err(const Vec3& a, const Vec3& b) {
  return (a - b).norm() / std::max(1.0, std::max(a.norm(), b.norm()));
}

inline view_transform::PointFeatureCloud random_cloud(SeedStream& s, std::size_t n,
                                                      std::size_t channels,
                                                      const view_transform::BevGrid& grid,
                                                      double spill = 1.15) {
  view_transform::PointFeatureCloud cloud;
  cloud.channels = channels;
  cloud.positions.reserve(n);
  cloud.weights.reserve(n);
  cloud.features.reserve(n * channels);
  for (std::size_t i = 0; i < n; ++i) {
    // spill > 1 spreads some points outside the ROI and z window
    cloud.positions.emplace_back(s.uniform(grid.x_min * spill, grid.x_max * spill),
                                 s.uniform(grid.y_min * spill, grid.y_max * spill),
                                 s.uniform(grid.z_min - 1.0, grid.z_max + 1.0));
    cloud.weights.push_back(s.next_unit());
    for (std::size_t c = 0; c < channels; ++c) cloud.features.push_back(s.uniform(0.0, 2.0));
  }
  return cloud;
}

inline std::string fail_msg(std::uint64_t seed, int trial, const std::string& what) {
  std::ostringstream os;
  os << what << " (seed=" << seed << ", trial=" << trial << ")";
  return os.str();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// geometry

/// Augmented-path unprojection equals direct unprojection for transforms
/// sampled from the full image-augmentation family.
inline CheckResult check_aug_unprojection_invariance(const CheckOptions& opt) {
  CheckResult r;
  r.name = "geometry.aug_unprojection_invariance";
  SeedStream root(opt.seed, "aug_unproject");
  augment::IdaConfig ida;  // full default ranges, flips included
  for (int t = 0; t < opt.trials; ++t) {
    SeedStream s = root.fork(t);
    const auto k = detail::random_intrinsics(s);
    const auto a = augment::sample_ida(ida, s);
    const geometry::PixelPoint p{s.uniform(0.0, 1600.0), s.uniform(0.0, 900.0)};
    const double d = s.uniform(1.0, 60.0);

    const geometry::CameraPoint direct = geometry::pixel_to_camera(p, d, k);
    const Vec2 p_aug = a.apply(Vec2(p.x, p.y));
    geometry::CameraPoint via_aug;
    if (opt.corrupt_unprojection) {
      // deliberately wrong: applies A a second time instead of undoing it
      const Vec3 q = k.inverse() * (a.matrix() * Vec3(p_aug.x(), p_aug.y(), 1.0) * d);
      via_aug = {q.x(), q.y(), q.z()};
    } else {
      via_aug = geometry::unproject_augmented({p_aug.x(), p_aug.y()}, d, k, a);
    }
    const double err = detail::vec_rel_err(direct.vec(), via_aug.vec());
    r.worst = std::max(r.worst, err);
    if (err >= 1e-9) {
      r.pass = false;
      r.detail = detail::fail_msg(opt.seed, t, "augmented and direct unprojection diverge");
      return r;
    }
  }
  return r;
}

inline CheckResult check_aug_inverse_roundtrip(const CheckOptions& opt) {
  CheckResult r;
  r.name = "geometry.aug_inverse_roundtrip";
  SeedStream root(opt.seed, "aug_inv");
  augment::IdaConfig ida;
  for (int t = 0; t < opt.trials; ++t) {
    SeedStream s = root.fork(t);
    const auto a = augment::sample_ida(ida, s);
    const Vec2 p(s.uniform(-100.0, 1700.0), s.uniform(-100.0, 1000.0));
    const Vec2 back = a.apply_inverse(a.apply(p));
    const double err = (back - p).norm() / std::max(1.0, p.norm());
    r.worst = std::max(r.worst, err);
    if (err >= 1e-10) {
      r.pass = false;
      r.detail = detail::fail_msg(opt.seed, t, "A^-1 A p != p");
      return r;
    }
  }
  return r;
}

inline CheckResult check_reprojection_roundtrip(const CheckOptions& opt) {
  CheckResult r;
  r.name = "geometry.reprojection_roundtrip";
  SeedStream root(opt.seed, "reproj");
  for (int t = 0; t < opt.trials; ++t) {
    SeedStream s = root.fork(t);
    const auto k = detail::random_intrinsics(s);
    const geometry::PixelPoint p{s.uniform(0.0, 1600.0), s.uniform(0.0, 900.0)};
    const double d = s.uniform(0.5, 80.0);
    const auto cam = geometry::pixel_to_camera(p, d, k);
    const auto back = geometry::camera_to_pixel(cam, k);
    const double err = std::hypot(back.x - p.x, back.y - p.y) /
                       std::max(1.0, std::hypot(p.x, p.y));
    r.worst = std::max(r.worst, err);
    if (err >= 1e-9) {
      r.pass = false;
      r.detail = detail::fail_msg(opt.seed, t, "projection does not invert unprojection");
      return r;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// view_transform

inline CheckResult check_depth_weight_normalization(const CheckOptions& opt) {
  CheckResult r;
  r.name = "view_transform.depth_weight_normalization";
  SeedStream root(opt.seed, "softmax");
  for (int t = 0; t < opt.trials; ++t) {
    SeedStream s = root.fork(t);
    const std::size_t d = 1 + s.next_u64() % 40, h = 1 + s.next_u64() % 6, w = 1 + s.next_u64() % 6;
    view_transform::FeatureMap fm;
    fm.data = Tensor3(2, h, w, 1.0);
    view_transform::DepthLogits logits;
    logits.data = Tensor3(d, h, w);
    for (double& v : logits.data.data) v = s.uniform(-30.0, 30.0);
    const auto lifted = view_transform::lift(fm, logits);
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j) {
        double sum = 0.0;
        for (std::size_t kk = 0; kk < d; ++kk) sum += lifted.weights(kk, i, j);
        const double err = std::abs(sum - 1.0);
        r.worst = std::max(r.worst, err);
        if (err >= 1e-6) {
          r.pass = false;
          r.detail = detail::fail_msg(opt.seed, t, "depth weights do not sum to 1");
          return r;
        }
      }
  }
  return r;
}

inline CheckResult check_mass_conservation(const CheckOptions& opt) {
  CheckResult r;
  r.name = "view_transform.mass_conservation";
  SeedStream root(opt.seed, "mass");
  view_transform::BevGrid grid;
  for (int t = 0; t < opt.trials; ++t) {
    SeedStream s = root.fork(t);
    const std::size_t n = 200 + s.next_u64() % 2000;
    const auto cloud = detail::random_cloud(s, n, 3, grid);
    double expected = 0.0;
    for (std::size_t p = 0; p < cloud.size(); ++p) {
      const Vec3& pos = cloud.positions[p];
      if (pos.z() < grid.z_min || pos.z() > grid.z_max) continue;
      if (grid.cell_index(pos.x(), pos.y()) < 0) continue;
      double f = 0.0;
      for (std::size_t c = 0; c < cloud.channels; ++c) f += cloud.features[p * cloud.channels + c];
      expected += cloud.weights[p] * f;
    }
    const auto bev = view_transform::splat_sorted(cloud, grid);
    const double total = bev.data.sum();
    const double err = std::abs(total - expected) / std::max(1.0, std::abs(expected));
    r.worst = std::max(r.worst, err);
    if (err >= 1e-6) {
      r.pass = false;
      r.detail = detail::fail_msg(opt.seed, t, "BEV mass != in-ROI point mass");
      return r;
    }
  }
  return r;
}

inline CheckResult check_kernel_equivalence(const CheckOptions& opt, std::size_t max_points = 100000) {
  CheckResult r;
  r.name = "view_transform.kernel_equivalence";
  SeedStream root(opt.seed, "kernels");
  view_transform::BevGrid grid;
  const int rounds = std::max(1, opt.trials / 10);
  for (int t = 0; t < rounds; ++t) {
    SeedStream s = root.fork(t);
    const std::size_t n = 1 + s.next_u64() % max_points;
    const auto cloud = detail::random_cloud(s, n, 4, grid);
    const auto a = view_transform::splat_naive(cloud, grid);
    const auto b = view_transform::splat_sorted(cloud, grid);
    for (std::size_t i = 0; i < a.data.size(); ++i) {
      const double err = rel_err(a.data.data[i], b.data.data[i]);
      r.worst = std::max(r.worst, err);
      if (err >= 1e-6) {
        r.pass = false;
        r.detail = detail::fail_msg(opt.seed, t, "sorted kernel deviates from naive kernel");
        return r;
      }
    }
  }
  return r;
}

inline CheckResult check_splat_additivity(const CheckOptions& opt) {
  CheckResult r;
  r.name = "view_transform.splat_additivity";
  SeedStream root(opt.seed, "additivity");
  view_transform::BevGrid grid;
  for (int t = 0; t < opt.trials; ++t) {
    SeedStream s = root.fork(t);
    auto c1 = detail::random_cloud(s, 100 + s.next_u64() % 500, 2, grid);
    const auto c2 = detail::random_cloud(s, 100 + s.next_u64() % 500, 2, grid);
    const auto b1 = view_transform::splat_sorted(c1, grid);
    const auto b2 = view_transform::splat_sorted(c2, grid);
    c1.append(c2);
    const auto whole = view_transform::splat_sorted(c1, grid);
    for (std::size_t i = 0; i < whole.data.size(); ++i) {
      const double err = rel_err(whole.data.data[i], b1.data.data[i] + b2.data.data[i]);
      r.worst = std::max(r.worst, err);
      if (err >= 1e-6) {
        r.pass = false;
        r.detail = detail::fail_msg(opt.seed, t, "splat(c1 u c2) != splat(c1) + splat(c2)");
        return r;
      }
    }
  }
  return r;
}

namespace detail {

struct FlipScene {
  view_transform::CameraInput original;
  view_transform::CameraInput flipped;
};

/// Random single-camera content plus its exactly flipped counterpart.
/// Lattice-aligned image flips are x -> W - x (one crop-translate past the
/// pixel-center flip); they induce a plain pixel-center flip on the feature
/// lattice, so the warped features are exact index reversals.
inline FlipScene make_flip_scene(SeedStream& s, const view_transform::DepthBins& bins) {
  const std::size_t c = 2, h = 8, w = 22;
  const int stride = 16;
  const double img_w = w * stride, img_h = h * stride;

  view_transform::CameraInput orig{view_transform::FeatureMap{Tensor3(c, h, w), stride},
                                   view_transform::DepthLogits{Tensor3(bins.count(), h, w)},
                                   random_intrinsics(s, img_w, img_h),
                                   scenegen::ring_camera_pose(s.uniform(0.0, 2.0 * kPi)),
                                   geometry::AugTransform2D::identity()};
  for (double& v : orig.features.data.data) v = s.uniform(0.0, 2.0);
  for (double& v : orig.logits.data.data) v = s.uniform(-10.0, 10.0);

  view_transform::CameraInput flip = orig;
  flip.aug = geometry::compose_aug({geometry::FlipOp{img_w}, geometry::CropOp{Vec2(-1.0, 0.0)}});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j)
        flip.features.data(ch, i, j) = orig.features.data(ch, i, w - 1 - j);
  for (std::size_t k = 0; k < bins.count(); ++k)
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j)
        flip.logits.data(k, i, j) = orig.logits.data(k, i, w - 1 - j);
  return {std::move(orig), std::move(flip)};
}

}  // namespace detail

/// Image-view augmentation never moves BEV content: a lattice-aligned flip
/// applied consistently to features, logits, and the unprojection transform
/// yields the identical BEV raster.
inline CheckResult check_flip_decoupling(const CheckOptions& opt) {
  CheckResult r;
  r.name = "view_transform.flip_decoupling_exact";
  SeedStream root(opt.seed, "flip_decouple");
  const view_transform::DepthBins bins(1.0, 21.0, 2.0);
  view_transform::BevGrid grid;
  for (int t = 0; t < opt.trials; ++t) {
    SeedStream s = root.fork(t);
    auto scene = detail::make_flip_scene(s, bins);
    const auto bev0 = view_transform::view_transform({scene.original}, grid, bins);
    const auto bev1 = view_transform::view_transform({scene.flipped}, grid, bins);
    for (std::size_t i = 0; i < bev0.data.size(); ++i) {
      const double err = rel_err(bev0.data.data[i], bev1.data.data[i]);
      r.worst = std::max(r.worst, err);
      if (err >= 1e-6) {
        r.pass = false;
        r.detail = detail::fail_msg(opt.seed, t, "flipped input changed the BEV raster");
        return r;
      }
    }
  }
  return r;
}

/// Relaxed decoupling for fractional scale/rotation: the BEV center of mass
/// of a single bright pixel moves less than one cell when the augmentation
/// is applied consistently.
inline CheckResult check_scale_rot_decoupling(const CheckOptions& opt) {
  CheckResult r;
  r.name = "view_transform.scale_rot_decoupling_com";
  SeedStream root(opt.seed, "com_decouple");

  const int stride = 16;
  const std::size_t src_h = 56, src_w = 100;   // 1600 x 896 source image
  const std::size_t out_h = 16, out_w = 44;    // 704 x 256 crop
  const view_transform::DepthBins bins(1.0, 61.0, 1.0);
  view_transform::BevGrid grid;
  const auto k = geometry::CameraIntrinsics::from_pinhole(1142.0, 1142.0, (1600.0 - 1.0) / 2.0,
                                                          (896.0 - 1.0) / 2.0);
  augment::IdaConfig ida;
  ida.flip_prob = 0.0;
  ida.source_w = 1600;
  ida.source_h = 896;
  ida.crop_horizontal_mode = augment::CropHorizontalMode::kRandom;

  int done = 0;
  int attempts = 0;
  while (done < opt.trials) {
    if (++attempts > opt.trials * 50) {
      r.pass = false;
      r.detail = "could not place enough in-ROI impulses";
      return r;
    }
    SeedStream s = root.fork(attempts);
    const auto aug = augment::sample_ida(ida, s);
    const auto pose = scenegen::ring_camera_pose(s.uniform(0.0, 2.0 * kPi));

    // pick a bright pixel in the augmented (cropped) feature lattice and find
    // its source pixel the same way the nearest-neighbor warp would
    const auto px = static_cast<std::size_t>(s.uniform_int(0, static_cast<std::int64_t>(out_w) - 1));
    const auto py = static_cast<std::size_t>(s.uniform_int(0, static_cast<std::int64_t>(out_h) - 1));
    const std::size_t bin = 4 + s.next_u64() % 40;  // depth 5.5 .. 44.5 m
    const Vec2 lattice_aug((px + 0.5) * stride, (py + 0.5) * stride);
    const Vec2 src_px = aug.apply_inverse(lattice_aug);
    const auto sx = static_cast<std::int64_t>(std::floor(src_px.x() / stride));
    const auto sy = static_cast<std::int64_t>(std::floor(src_px.y() / stride));
    if (sx < 0 || sy < 0 || sx >= static_cast<std::int64_t>(src_w) ||
        sy >= static_cast<std::int64_t>(src_h))
      continue;

    // original point must land inside the ROI and the vertical window
    const double d = bins.bin_center(bin);
    const auto cam_pt = geometry::pixel_to_camera(
        {(static_cast<double>(sx) + 0.5) * stride, (static_cast<double>(sy) + 0.5) * stride}, d, k);
    const Vec3 ego = geometry::camera_to_ego(cam_pt, pose);
    if (ego.z() < grid.z_min + 0.5 || ego.z() > grid.z_max - 0.5) continue;
    if (std::abs(ego.x()) > grid.x_max - 2.0 || std::abs(ego.y()) > grid.y_max - 2.0) continue;

    // original: impulse feature at the source pixel, one-hot depth
    view_transform::CameraInput orig{view_transform::FeatureMap{Tensor3(1, src_h, src_w), stride},
                                     view_transform::DepthLogits{Tensor3(bins.count(), src_h, src_w)},
                                     k, pose, geometry::AugTransform2D::identity()};
    orig.features.data(0, static_cast<std::size_t>(sy), static_cast<std::size_t>(sx)) = 1.0;
    for (std::size_t kk = 0; kk < bins.count(); ++kk)
      for (std::size_t i = 0; i < src_h; ++i)
        for (std::size_t j = 0; j < src_w; ++j)
          orig.logits.data(kk, i, j) = (kk == bin) ? 40.0 : -40.0;

    // augmented: honest nearest-neighbor warp of features (logits are
    // uniform over pixels here, so the warp only moves the bright pixel)
    view_transform::CameraInput warped{view_transform::FeatureMap{Tensor3(1, out_h, out_w), stride},
                                       view_transform::DepthLogits{Tensor3(bins.count(), out_h, out_w)},
                                       k, pose, aug};
    for (std::size_t i = 0; i < out_h; ++i)
      for (std::size_t j = 0; j < out_w; ++j) {
        const Vec2 q = aug.apply_inverse(Vec2((j + 0.5) * stride, (i + 0.5) * stride));
        const auto fx = static_cast<std::int64_t>(std::floor(q.x() / stride));
        const auto fy = static_cast<std::int64_t>(std::floor(q.y() / stride));
        if (fx < 0 || fy < 0 || fx >= static_cast<std::int64_t>(src_w) ||
            fy >= static_cast<std::int64_t>(src_h))
          continue;
        warped.features.data(0, i, j) =
            orig.features.data(0, static_cast<std::size_t>(fy), static_cast<std::size_t>(fx));
        for (std::size_t kk = 0; kk < bins.count(); ++kk)
          warped.logits.data(kk, i, j) =
              orig.logits.data(kk, static_cast<std::size_t>(fy), static_cast<std::size_t>(fx));
      }

    // center of mass of the splatted mass at full positional resolution
    // (the raster quantizes every cell's mass to its center, which by itself
    // costs up to half a cell and would swamp the sub-cell drift budget)
    auto center_of_mass = [&](const view_transform::CameraInput& cam, Vec2& out) {
      const auto frustum = view_transform::build_frustum(bins, cam.features.data.d1,
                                                         cam.features.data.d2, stride);
      const auto cloud = view_transform::render_points(view_transform::lift(cam.features, cam.logits),
                                                       frustum, cam.intrinsics, cam.pose, cam.aug);
      double m = 0.0, mx = 0.0, my = 0.0;
      for (std::size_t p = 0; p < cloud.size(); ++p) {
        const Vec3& pos = cloud.positions[p];
        if (pos.z() < grid.z_min || pos.z() > grid.z_max) continue;
        if (grid.cell_index(pos.x(), pos.y()) < 0) continue;
        const double v = cloud.weights[p] * cloud.features[p];
        m += v;
        mx += v * pos.x();
        my += v * pos.y();
      }
      if (m <= 1e-12) return false;
      out = Vec2(mx / m, my / m);
      return true;
    };
    Vec2 com0, com1;
    if (!center_of_mass(orig, com0) || !center_of_mass(warped, com1)) continue;
    const double drift = (com0 - com1).norm();

    // and the rasterized mass peak moves by at most one cell index
    const auto bev0 = view_transform::view_transform({orig}, grid, bins);
    const auto bev1 = view_transform::view_transform({warped}, grid, bins);
    auto argmax_cell = [&](const view_transform::BevFeature& bev) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < bev.data.size(); ++i)
        if (bev.data.data[i] > bev.data.data[best]) best = i;
      return std::pair<std::int64_t, std::int64_t>(
          static_cast<std::int64_t>(best / grid.ny()), static_cast<std::int64_t>(best % grid.ny()));
    };
    const auto [ax0, ay0] = argmax_cell(bev0);
    const auto [ax1, ay1] = argmax_cell(bev1);
    const auto cheb = std::max(std::llabs(ax0 - ax1), std::llabs(ay0 - ay1));

    r.worst = std::max(r.worst, drift / grid.cell);
    if (drift >= grid.cell || cheb > 1) {
      r.pass = false;
      r.detail = detail::fail_msg(opt.seed, attempts, "impulse mass strayed under consistent warping");
      return r;
    }
    ++done;
  }
  return r;
}

// ---------------------------------------------------------------------------
// augment

inline CheckResult check_bda_joint_consistency(const CheckOptions& opt) {
  CheckResult r;
  r.name = "augment.bda_joint_consistency";
  SeedStream root(opt.seed, "bda_joint");
  view_transform::BevGrid grid;
  augment::BdaConfig cfg;  // full default ranges
  int done = 0, attempts = 0;
  while (done < opt.trials) {
    if (++attempts > opt.trials * 50) {
      r.pass = false;
      r.detail = "could not place enough boxes";
      return r;
    }
    SeedStream s = root.fork(attempts);
    Box3D box;
    box.center = Vec3(s.uniform(-40.0, 40.0), s.uniform(-40.0, 40.0), s.uniform(-1.0, 1.0));
    box.dims = Vec3(s.uniform(0.5, 3.0), s.uniform(0.5, 5.0), s.uniform(0.5, 3.0));
    box.yaw = wrap_angle(s.uniform(-kPi, kPi));
    box.velocity = Vec2(s.uniform(-5.0, 5.0), s.uniform(-5.0, 5.0));
    const auto t = augment::sample_bda(cfg, s);

    const std::int64_t cell = grid.cell_index(box.center.x(), box.center.y());
    if (cell < 0) continue;
    view_transform::BevFeature feat;
    feat.data = Tensor3(1, grid.nx(), grid.ny());
    feat.data.data[static_cast<std::size_t>(cell)] = 1.0;

    const auto feat_t = augment::apply_bda_feature(feat, t, grid);
    const auto boxes_t = augment::apply_bda_boxes({box}, t);
    const std::int64_t target = grid.cell_index(boxes_t[0].center.x(), boxes_t[0].center.y());
    if (target < 0) continue;  // transform pushed the box out of the ROI

    // nearest maximal cell to the transformed center (ties are genuine
    // duplicates of the impulse value)
    double best = 0.0;
    for (double v : feat_t.data.data) best = std::max(best, v);
    if (best <= 0.0) continue;  // nearest-neighbor resampling dropped the
                                // impulse (sub-cell alignment); not a
                                // consistency failure
    const std::int64_t tx = target / static_cast<std::int64_t>(grid.ny());
    const std::int64_t ty = target % static_cast<std::int64_t>(grid.ny());
    std::int64_t best_cheb = 1 << 20;
    for (std::size_t ix = 0; ix < grid.nx(); ++ix)
      for (std::size_t iy = 0; iy < grid.ny(); ++iy) {
        if (feat_t.data(0, ix, iy) != best) continue;
        const std::int64_t cheb = std::max(std::llabs(static_cast<std::int64_t>(ix) - tx),
                                           std::llabs(static_cast<std::int64_t>(iy) - ty));
        best_cheb = std::min(best_cheb, cheb);
      }
    r.worst = std::max(r.worst, static_cast<double>(best_cheb));
    if (best_cheb > 1) {
      r.pass = false;
      r.detail = detail::fail_msg(opt.seed, attempts, "impulse argmax strayed from the box center");
      return r;
    }
    ++done;
  }
  return r;
}

inline CheckResult check_bda_group_roundtrip(const CheckOptions& opt) {
  CheckResult r;
  r.name = "augment.bda_group_roundtrip";
  SeedStream root(opt.seed, "bda_group");
  augment::BdaConfig cfg;
  for (int t = 0; t < opt.trials; ++t) {
    SeedStream s = root.fork(t);
    Box3D box;
    box.center = Vec3(s.uniform(-40.0, 40.0), s.uniform(-40.0, 40.0), s.uniform(-2.0, 2.0));
    box.dims = Vec3(s.uniform(0.5, 3.0), s.uniform(0.5, 5.0), s.uniform(0.5, 3.0));
    box.yaw = wrap_angle(s.uniform(-kPi, kPi));
    box.velocity = Vec2(s.uniform(-5.0, 5.0), s.uniform(-5.0, 5.0));
    const auto bda = augment::sample_bda(cfg, s);

    const auto back = augment::apply_bda_boxes(augment::apply_bda_boxes({box}, bda), bda.inverse());
    const Box3D& b = back[0];
    const double err =
        std::max({(b.center - box.center).norm(), (b.dims - box.dims).norm(),
                  (b.velocity - box.velocity).norm(), std::abs(wrap_angle(b.yaw - box.yaw))});
    r.worst = std::max(r.worst, err);
    if (err >= 1e-9) {
      r.pass = false;
      r.detail = detail::fail_msg(opt.seed, t, "t^-1 t did not recover the box");
      return r;
    }
  }
  return r;
}

/// Structural decoupling: image-view augmentation has no write path to the
/// targets. Run the full pipeline with aggressive image augmentation and
/// confirm the ground truth is bit-identical afterwards.
inline CheckResult check_ida_targets_untouched(const CheckOptions& opt) {
  CheckResult r;
  r.name = "augment.ida_targets_untouched";
  config::PipelineConfig cfg;
  cfg.scene.n_cameras = 2;
  cfg.scene.image_w = 192;
  cfg.scene.image_h = 96;
  cfg.scene.n_boxes_min = 1;
  cfg.scene.n_boxes_max = 3;
  cfg.scene.spawn_radius = 30.0;
  cfg.image_encoder.kind = encoder::EncoderKind::kDepthOracle;
  cfg.image_encoder.channels = 2;
  cfg.bins = view_transform::DepthBins(1.0, 41.0, 1.0);
  cfg.ida_enabled = true;
  cfg.ida.source_w = 192;
  cfg.ida.source_h = 96;
  cfg.ida.crop_w = 160;
  cfg.ida.crop_h = 64;
  cfg.ida.scale_min = 0.9;
  cfg.ida.scale_max = 1.1;
  cfg.seed = opt.seed;
  cfg.validate();

  const int rounds = std::max(1, opt.trials / 20);
  for (int t = 0; t < rounds; ++t) {
    const auto sample = scenegen::generate_scene(cfg.scene, opt.seed + t);
    const DetectionSet before = sample.boxes;
    (void)pipeline::infer_sample(sample, cfg, static_cast<std::uint64_t>(t));
    if (sample.boxes.size() != before.size()) {
      r.pass = false;
      r.detail = detail::fail_msg(opt.seed, t, "ground-truth box list changed size");
      return r;
    }
    for (std::size_t i = 0; i < before.size(); ++i) {
      const Box3D& a = before[i];
      const Box3D& b = sample.boxes[i];
      if (a.center != b.center || a.dims != b.dims || a.yaw != b.yaw ||
          a.velocity != b.velocity || a.class_id != b.class_id ||
          a.attribute_id != b.attribute_id || a.score != b.score) {
        r.pass = false;
        r.detail = detail::fail_msg(opt.seed, t, "image augmentation touched a target");
        return r;
      }
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// encoder

inline CheckResult check_encoder_determinism(const CheckOptions& opt) {
  CheckResult r;
  r.name = "encoder.determinism";
  SeedStream root(opt.seed, "enc_det");
  const int rounds = std::max(1, opt.trials / 20);
  for (int t = 0; t < rounds; ++t) {
    SeedStream s = root.fork(t);
    Tensor3 img(64, 96, 3);
    for (double& v : img.data) v = s.next_unit();
    encoder::EncoderSpec spec;
    spec.kind = encoder::EncoderKind::kToyConv;
    spec.channels = 4;
    spec.stride = 16;
    spec.seed = s.next_u64();
    const view_transform::DepthBins bins(1.0, 9.0, 1.0);
    const auto [fm1, lg1] = encoder::encode_image(img, spec, bins);
    const auto [fm2, lg2] = encoder::encode_image(img, spec, bins);
    if (fm1.data.data != fm2.data.data || lg1.data.data != lg2.data.data) {
      r.pass = false;
      r.detail = detail::fail_msg(opt.seed, t, "toy encoder is not deterministic");
      return r;
    }
    view_transform::BevFeature bev;
    bev.data = Tensor3(4, 16, 16);
    for (double& v : bev.data.data) v = s.uniform(-1.0, 1.0);
    encoder::EncoderSpec bspec;
    bspec.kind = encoder::EncoderKind::kToyConv;
    bspec.seed = spec.seed;
    const auto e1 = encoder::encode_bev(bev, bspec);
    const auto e2 = encoder::encode_bev(bev, bspec);
    if (e1.data.data != e2.data.data) {
      r.pass = false;
      r.detail = detail::fail_msg(opt.seed, t, "BEV encoder is not deterministic");
      return r;
    }
  }
  return r;
}

inline CheckResult check_encoder_shapes(const CheckOptions& opt) {
  CheckResult r;
  r.name = "encoder.shape_contract";
  SeedStream root(opt.seed, "enc_shape");
  for (const int stride : {8, 16, 32}) {
    SeedStream s = root.fork(stride);
    Tensor3 img(96, 192, 3);
    for (double& v : img.data) v = s.next_unit();
    encoder::EncoderSpec spec;
    spec.kind = encoder::EncoderKind::kToyConv;
    spec.channels = 5;
    spec.stride = stride;
    spec.seed = 3;
    const view_transform::DepthBins bins(1.0, 13.0, 2.0);
    const auto [fm, lg] = encoder::encode_image(img, spec, bins);
    const bool ok = fm.data.d0 == 5 && fm.data.d1 == img.d0 / stride &&
                    fm.data.d2 == img.d1 / stride && lg.data.d0 == bins.count() &&
                    lg.data.d1 == fm.data.d1 && lg.data.d2 == fm.data.d2;
    if (!ok) {
      r.pass = false;
      r.detail = "encoder output shape violates the (C, H/stride, W/stride) contract";
      return r;
    }
  }
  return r;
}

/// End-to-end geometric sanity: with the depth oracle, splatted BEV mass on
/// object footprints strictly exceeds the mass at any cell farther than two
/// cells from every footprint.
inline CheckResult check_depth_oracle_footprint_mass(const CheckOptions& opt) {
  CheckResult r;
  r.name = "encoder.depth_oracle_footprint_mass";
  config::PipelineConfig cfg;
  cfg.scene.n_cameras = 6;
  cfg.scene.image_w = 352;
  cfg.scene.image_h = 128;
  cfg.scene.fov_deg = 70.0;
  cfg.scene.n_boxes_min = 1;
  cfg.scene.n_boxes_max = 4;
  cfg.scene.spawn_radius = 25.0;
  cfg.scene.dims_min = Vec3(1.8, 1.8, 1.8);
  cfg.scene.dims_max = Vec3(2.6, 2.6, 2.6);
  cfg.image_encoder.kind = encoder::EncoderKind::kDepthOracle;
  cfg.image_encoder.channels = 1;
  cfg.image_encoder.stride = 8;
  cfg.bins = view_transform::DepthBins(1.0, 41.0, 0.5);
  cfg.validate();

  const int rounds = std::max(1, opt.trials / 20);
  for (int t = 0; t < rounds; ++t) {
    const auto sample = scenegen::generate_scene(cfg.scene, opt.seed * 977 + t);
    std::vector<view_transform::CameraInput> inputs;
    for (const auto& cam : sample.cameras) {
      auto [fm, lg] = encoder::encode_image(cam.image, cfg.image_encoder, cfg.bins, &cam.depth);
      inputs.push_back({std::move(fm), std::move(lg), cam.intrinsics, cam.pose,
                        geometry::AugTransform2D::identity()});
    }
    const auto bev = view_transform::view_transform(inputs, cfg.grid, cfg.bins);

    const auto& grid = cfg.grid;
    auto in_footprint = [&](double x, double y, double dilation) {
      for (const Box3D& b : sample.boxes) {
        const double c = std::cos(b.yaw), s2 = std::sin(b.yaw);
        const double rx = x - b.center.x(), ry = y - b.center.y();
        const double lx = c * rx + s2 * ry, ly = -s2 * rx + c * ry;
        if (std::abs(lx) <= 0.5 * b.dims.y() + dilation && std::abs(ly) <= 0.5 * b.dims.x() + dilation)
          return true;
      }
      return false;
    };

    double max_footprint = 0.0, max_background = 0.0;
    for (std::size_t ix = 0; ix < grid.nx(); ++ix)
      for (std::size_t iy = 0; iy < grid.ny(); ++iy) {
        const Vec2 cc = grid.cell_center(ix, iy);
        const double m = bev.data(0, ix, iy);
        if (in_footprint(cc.x(), cc.y(), 0.5 * grid.cell))
          max_footprint = std::max(max_footprint, m);
        else if (!in_footprint(cc.x(), cc.y(), 2.0 * grid.cell + 0.5 * grid.cell))
          max_background = std::max(max_background, m);
      }
    if (!(max_footprint > max_background)) {
      r.pass = false;
      r.detail = detail::fail_msg(opt.seed, t, "background BEV mass reaches footprint levels");
      return r;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// head

inline CheckResult check_codec_roundtrip(const CheckOptions& opt) {
  CheckResult r;
  r.name = "head.codec_roundtrip";
  SeedStream root(opt.seed, "codec");
  view_transform::BevGrid grid;
  for (int t = 0; t < opt.trials; ++t) {
    SeedStream s = root.fork(t);
    Box3D box;
    box.center = Vec3(s.uniform(-49.0, 49.0), s.uniform(-49.0, 49.0), s.uniform(-2.0, 2.0));
    box.dims = Vec3(s.uniform(0.4, 4.0), s.uniform(0.4, 8.0), s.uniform(0.4, 4.0));
    box.yaw = wrap_angle(s.uniform(-kPi, kPi));
    box.velocity = Vec2(s.uniform(-10.0, 10.0), s.uniform(-10.0, 10.0));
    box.class_id = static_cast<int>(s.uniform_int(0, 2));

    const auto enc = head::encode_targets({box}, grid, 3);
    const auto dets = head::decode(enc.raster, grid, 10, 0.5);
    if (dets.size() != 1) {
      r.pass = false;
      r.detail = detail::fail_msg(opt.seed, t, "single box did not decode to a single peak");
      return r;
    }
    const Box3D& d = dets[0];
    const double center_err = (d.center - box.center).norm();
    double dims_rel = 0.0;
    for (int k = 0; k < 3; ++k) dims_rel = std::max(dims_rel, std::abs(d.dims[k] - box.dims[k]) / box.dims[k]);
    const double yaw_err = std::abs(wrap_angle(d.yaw - box.yaw));
    const double vel_err = (d.velocity - box.velocity).norm();
    r.worst = std::max({r.worst, center_err / (grid.cell / 1000.0), dims_rel / 1e-6, yaw_err / 1e-6});
    if (center_err >= grid.cell / 1000.0 || dims_rel >= 1e-6 || yaw_err >= 1e-6 ||
        vel_err >= 1e-9 || d.class_id != box.class_id) {
      r.pass = false;
      r.detail = detail::fail_msg(opt.seed, t, "decode(encode(box)) drifted");
      return r;
    }
  }
  return r;
}

inline CheckResult check_decode_permutation_invariance(const CheckOptions& opt) {
  CheckResult r;
  r.name = "head.decode_permutation_invariance";
  SeedStream root(opt.seed, "perm");
  view_transform::BevGrid grid;
  for (int t = 0; t < opt.trials; ++t) {
    SeedStream s = root.fork(t);
    DetectionSet boxes;
    for (int b = 0; b < 4; ++b) {
      Box3D box;
      // quadrant placement keeps peak cells distinct
      const double qx = (b & 1) ? 20.0 : -20.0, qy = (b & 2) ? 20.0 : -20.0;
      box.center = Vec3(qx + s.uniform(-10.0, 10.0), qy + s.uniform(-10.0, 10.0), 0.0);
      box.dims = Vec3(1.5, 2.5, 1.5);
      box.yaw = wrap_angle(s.uniform(-kPi, kPi));
      box.class_id = static_cast<int>(s.uniform_int(0, 1));
      boxes.push_back(box);
    }
    DetectionSet reversed(boxes.rbegin(), boxes.rend());
    const auto d1 = head::decode(head::encode_targets(boxes, grid, 2).raster, grid);
    const auto d2 = head::decode(head::encode_targets(reversed, grid, 2).raster, grid);
    if (d1.size() != d2.size()) {
      r.pass = false;
      r.detail = detail::fail_msg(opt.seed, t, "decode output depends on encode order");
      return r;
    }
    for (std::size_t i = 0; i < d1.size(); ++i) {
      if ((d1[i].center - d2[i].center).norm() > 1e-12 || d1[i].class_id != d2[i].class_id) {
        r.pass = false;
        r.detail = detail::fail_msg(opt.seed, t, "decode output depends on encode order");
        return r;
      }
    }
  }
  return r;
}

inline CheckResult check_yaw_recovery(const CheckOptions& opt) {
  CheckResult r;
  r.name = "head.yaw_recovery_exact";
  SeedStream root(opt.seed, "yaw");
  view_transform::BevGrid grid;
  for (int t = 0; t < opt.trials; ++t) {
    SeedStream s = root.fork(t);
    Box3D box;
    box.center = Vec3(s.uniform(-40.0, 40.0), s.uniform(-40.0, 40.0), 0.0);
    box.dims = Vec3(2.0, 4.0, 2.0);
    box.yaw = wrap_angle(s.uniform(-kPi, kPi));
    const auto enc = head::encode_targets({box}, grid, 1);
    // the encoder invariant: sin^2 + cos^2 == 1 at the peak cell
    const auto cx = static_cast<std::size_t>(std::floor((box.center.x() - grid.x_min) / grid.cell));
    const auto cy = static_cast<std::size_t>(std::floor((box.center.y() - grid.y_min) / grid.cell));
    const double sc = enc.raster.rot(0, cx, cy), cc = enc.raster.rot(1, cx, cy);
    const double norm_err = std::abs(sc * sc + cc * cc - 1.0);
    const double yaw_err = std::abs(wrap_angle(std::atan2(sc, cc) - box.yaw));
    r.worst = std::max({r.worst, norm_err, yaw_err});
    if (norm_err >= 1e-12 || yaw_err >= 1e-9) {
      r.pass = false;
      r.detail = detail::fail_msg(opt.seed, t, "yaw is not exact at an encoded peak");
      return r;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// metrics

struct GoldenRow {
  double map, ate, ase, aoe, ave, aae, nds;
};

/// Published leaderboard scorelines (val and test splits) used to pin the
/// composite-score arithmetic.
inline const std::vector<GoldenRow>& golden_rows() {
  static const std::vector<GoldenRow> rows = {
      // val split
      {0.306, 0.716, 0.264, 0.609, 1.426, 0.658, 0.328},
      {0.295, 0.806, 0.268, 0.511, 1.315, 0.170, 0.372},
      {0.303, 0.860, 0.278, 0.437, 0.967, 0.235, 0.374},
      {0.335, 0.732, 0.263, 0.423, 1.285, 0.172, 0.409},
      {0.286, 0.724, 0.278, 0.590, 0.873, 0.247, 0.372},
      {0.288, 0.722, 0.269, 0.538, 0.911, 0.270, 0.373},
      {0.294, 0.686, 0.278, 0.547, 0.865, 0.261, 0.384},
      {0.304, 0.719, 0.272, 0.555, 0.903, 0.257, 0.381},
      {0.317, 0.704, 0.273, 0.531, 0.940, 0.250, 0.389},
      {0.322, 0.664, 0.266, 0.508, 0.894, 0.243, 0.403},
      {0.349, 0.637, 0.269, 0.490, 0.914, 0.268, 0.417},
      // test split
      {0.305, 0.517, 0.290, 0.500, 0.316, 0.368, 0.453},
      {0.326, 0.631, 0.261, 0.516, 0.614, 0.115, 0.449},
      {0.671, 0.249, 0.236, 0.350, 0.250, 0.136, 0.714},
      {0.304, 0.738, 0.263, 0.546, 1.553, 0.134, 0.384},
      {0.338, 0.658, 0.255, 0.629, 1.629, 0.142, 0.400},
      {0.358, 0.690, 0.249, 0.452, 1.434, 0.124, 0.428},
      {0.386, 0.626, 0.245, 0.451, 1.509, 0.127, 0.448},
      {0.398, 0.556, 0.239, 0.414, 1.010, 0.153, 0.463},
  };
  return rows;
}

inline CheckResult check_nds_golden_rows(const CheckOptions&) {
  CheckResult r;
  r.name = "metrics.nds_golden_rows";
  for (std::size_t i = 0; i < golden_rows().size(); ++i) {
    const GoldenRow& g = golden_rows()[i];
    const double v = metrics::nds(g.map, {g.ate, g.ase, g.aoe, g.ave, g.aae});
    const double err = std::abs(v - g.nds);
    r.worst = std::max(r.worst, err);
    if (err > 0.0015) {
      r.pass = false;
      std::ostringstream os;
      os << "scoreline row " << i << ": computed " << v << " vs published " << g.nds;
      r.detail = os.str();
      return r;
    }
  }
  return r;
}

namespace detail {

inline DetectionSet random_box_set(SeedStream& s, int n, int n_classes, double spread = 40.0) {
  DetectionSet out;
  for (int i = 0; i < n; ++i) {
    Box3D b;
    b.center = Vec3(s.uniform(-spread, spread), s.uniform(-spread, spread), s.uniform(-1.0, 1.0));
    b.dims = Vec3(s.uniform(0.5, 3.0), s.uniform(0.5, 5.0), s.uniform(0.5, 3.0));
    b.yaw = wrap_angle(s.uniform(-kPi, kPi));
    b.velocity = Vec2(s.uniform(-5.0, 5.0), s.uniform(-5.0, 5.0));
    b.class_id = static_cast<int>(s.uniform_int(0, n_classes - 1));
    b.attribute_id = static_cast<int>(s.uniform_int(0, 3));
    b.score = s.next_unit();
    out.push_back(b);
  }
  return out;
}

}  // namespace detail

inline CheckResult check_ap_monotonicity(const CheckOptions& opt) {
  CheckResult r;
  r.name = "metrics.ap_monotonicity";
  SeedStream root(opt.seed, "ap_mono");
  for (int t = 0; t < opt.trials; ++t) {
    SeedStream s = root.fork(t);
    const auto gts = detail::random_box_set(s, 1 + static_cast<int>(s.next_u64() % 6), 1, 20.0);
    auto preds = detail::random_box_set(s, 1 + static_cast<int>(s.next_u64() % 8), 1, 25.0);
    const double ap0 = metrics::average_precision(preds, gts, 2.0);

    // adding a false positive can only lower AP
    Box3D fp;
    fp.center = Vec3(500.0, 500.0, 0.0);
    fp.score = s.next_unit();
    auto with_fp = preds;
    with_fp.push_back(fp);
    const double ap_fp = metrics::average_precision(with_fp, gts, 2.0);
    if (ap_fp > ap0 + 1e-12) {
      r.pass = false;
      r.detail = detail::fail_msg(opt.seed, t, "AP increased after adding a false positive");
      return r;
    }

    // adding a true positive on an unmatched ground truth can only raise AP
    const auto m = metrics::match_detections(preds, gts, 2.0);
    if (!m.unmatched_gts.empty()) {
      Box3D tp = gts[m.unmatched_gts.front()];
      tp.score = s.next_unit();
      auto with_tp = preds;
      with_tp.push_back(tp);
      const double ap_tp = metrics::average_precision(with_tp, gts, 2.0);
      if (ap_tp < ap0 - 1e-12) {
        r.pass = false;
        r.detail = detail::fail_msg(opt.seed, t, "AP decreased after adding a true positive");
        return r;
      }
    }
  }
  return r;
}

inline CheckResult check_match_permutation_invariance(const CheckOptions& opt) {
  CheckResult r;
  r.name = "metrics.match_permutation_invariance";
  SeedStream root(opt.seed, "match_perm");
  for (int t = 0; t < opt.trials; ++t) {
    SeedStream s = root.fork(t);
    const auto gts = detail::random_box_set(s, 4, 1, 10.0);
    auto preds = detail::random_box_set(s, 6, 1, 12.0);
    // force score ties
    for (std::size_t i = 0; i < preds.size(); ++i) preds[i].score = (i % 2) ? 0.25 : 0.75;

    const auto m1 = metrics::match_detections(preds, gts, 4.0);
    DetectionSet shuffled = preds;
    for (std::size_t i = shuffled.size(); i > 1; --i)
      std::swap(shuffled[i - 1], shuffled[static_cast<std::size_t>(s.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
    const auto m2 = metrics::match_detections(shuffled, gts, 4.0);

    auto matched_gts = [](const metrics::MatchResult& m) {
      std::vector<std::size_t> g;
      for (const auto& [pi, gi] : m.matches) g.push_back(gi);
      std::sort(g.begin(), g.end());
      return g;
    };
    if (matched_gts(m1) != matched_gts(m2) || m1.matches.size() != m2.matches.size()) {
      r.pass = false;
      r.detail = detail::fail_msg(opt.seed, t, "match set depends on input permutation");
      return r;
    }
  }
  return r;
}

inline CheckResult check_self_eval_zero(const CheckOptions& opt) {
  CheckResult r;
  r.name = "metrics.self_eval_zero";
  SeedStream root(opt.seed, "self_eval");
  const int rounds = std::max(1, opt.trials / 10);
  for (int t = 0; t < rounds; ++t) {
    SeedStream s = root.fork(t);
    auto gts = detail::random_box_set(s, 2 + static_cast<int>(s.next_u64() % 8), 3, 30.0);
    for (Box3D& g : gts) g.score = 1.0;
    const auto res = metrics::evaluate(gts, gts);
    const double err = std::max({std::abs(res.mean_ap - 1.0), std::abs(res.nds_score - 1.0),
                                 res.mean_errors.ate, res.mean_errors.ase, res.mean_errors.aoe,
                                 res.mean_errors.ave, res.mean_errors.aae});
    r.worst = std::max(r.worst, err);
    if (err >= 1e-9) {
      r.pass = false;
      r.detail = detail::fail_msg(opt.seed, t, "self-evaluation is not perfect");
      return r;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// scenegen

inline CheckResult check_silhouette_unprojection(const CheckOptions& opt) {
  CheckResult r;
  r.name = "scenegen.silhouette_unprojection";
  scenegen::SceneConfig cfg;
  cfg.n_cameras = 4;
  cfg.image_w = 256;
  cfg.image_h = 128;
  cfg.fov_deg = 95.0;
  cfg.n_boxes_max = 4;
  cfg.spawn_radius = 30.0;
  const view_transform::BevGrid grid;
  const int rounds = std::max(1, opt.trials / 20);
  for (int t = 0; t < rounds; ++t) {
    const auto sample = scenegen::generate_scene(cfg, opt.seed * 31 + t);
    for (const auto& cam : sample.cameras) {
      for (std::size_t v = 0; v < cam.depth.d0; ++v) {
        for (std::size_t u = 0; u < cam.depth.d1; ++u) {
          const double d = cam.depth(v, u);
          if (d <= 0.0) continue;
          const auto pt = geometry::pixel_to_camera(
              {static_cast<double>(u), static_cast<double>(v)}, d, cam.intrinsics);
          const Vec3 ego = geometry::camera_to_ego(pt, cam.pose);
          bool inside = false;
          for (const Box3D& b : sample.boxes) {
            const double c = std::cos(b.yaw), s2 = std::sin(b.yaw);
            const double rx = ego.x() - b.center.x(), ry = ego.y() - b.center.y();
            const double lx = c * rx + s2 * ry, ly = -s2 * rx + c * ry;
            if (std::abs(lx) <= 0.5 * b.dims.y() + grid.cell &&
                std::abs(ly) <= 0.5 * b.dims.x() + grid.cell) {
              inside = true;
              break;
            }
          }
          if (!inside) {
            r.pass = false;
            r.detail = detail::fail_msg(opt.seed, t, "silhouette pixel unprojected off every footprint");
            return r;
          }
        }
      }
    }
  }
  return r;
}

inline CheckResult check_footprints_disjoint(const CheckOptions& opt) {
  CheckResult r;
  r.name = "scenegen.footprints_disjoint";
  scenegen::SceneConfig cfg;
  cfg.n_boxes_min = 4;
  cfg.n_boxes_max = 8;
  cfg.image_w = 64;
  cfg.image_h = 32;
  const int rounds = std::max(1, opt.trials / 10);
  for (int t = 0; t < rounds; ++t) {
    const auto sample = scenegen::generate_scene(cfg, opt.seed * 67 + t);
    for (std::size_t i = 0; i < sample.boxes.size(); ++i)
      for (std::size_t j = i + 1; j < sample.boxes.size(); ++j)
        if (footprints_overlap(sample.boxes[i], sample.boxes[j])) {
          r.pass = false;
          r.detail = detail::fail_msg(opt.seed, t, "two box footprints overlap");
          return r;
        }
  }
  return r;
}

// ---------------------------------------------------------------------------
// pipeline

/// Collapsed-identity image and BEV augmentation must be bitwise identical
/// to running with augmentation disabled.
inline CheckResult check_identity_collapse(const CheckOptions& opt) {
  CheckResult r;
  r.name = "pipeline.identity_collapse";
  config::PipelineConfig plain;
  plain.scene.n_cameras = 2;
  plain.scene.image_w = 128;
  plain.scene.image_h = 64;
  plain.scene.n_boxes_min = 1;
  plain.scene.n_boxes_max = 3;
  plain.scene.spawn_radius = 25.0;
  plain.image_encoder.kind = encoder::EncoderKind::kToyConv;
  plain.image_encoder.channels = 3;
  plain.bins = view_transform::DepthBins(1.0, 31.0, 2.0);
  plain.seed = opt.seed;
  plain.validate();

  config::PipelineConfig collapsed = plain;
  collapsed.ida_enabled = true;
  collapsed.ida.flip_prob = 0.0;
  collapsed.ida.scale_min = collapsed.ida.scale_max = 1.0;
  collapsed.ida.rot_min_rad = collapsed.ida.rot_max_rad = 0.0;
  collapsed.ida.source_w = collapsed.ida.crop_w = plain.scene.image_w;
  collapsed.ida.source_h = collapsed.ida.crop_h = plain.scene.image_h;
  collapsed.ida.crop_horizontal_mode = augment::CropHorizontalMode::kCenter;
  collapsed.bda_enabled = true;
  collapsed.bda.flip_prob = 0.0;
  collapsed.bda.rot_min_rad = collapsed.bda.rot_max_rad = 0.0;
  collapsed.bda.scale_min = collapsed.bda.scale_max = 1.0;
  collapsed.validate();

  const int rounds = std::max(1, opt.trials / 20);
  for (int t = 0; t < rounds; ++t) {
    const auto sample = scenegen::generate_scene(plain.scene, opt.seed + 7 * t);
    pipeline::InferTrace trace_a, trace_b;
    const auto d1 = pipeline::infer_sample(sample, plain, static_cast<std::uint64_t>(t), &trace_a);
    const auto d2 = pipeline::infer_sample(sample, collapsed, static_cast<std::uint64_t>(t), &trace_b);
    if (trace_a.bev.data.data != trace_b.bev.data.data || d1.size() != d2.size()) {
      r.pass = false;
      r.detail = detail::fail_msg(opt.seed, t, "collapsed-identity augmentation is not bitwise neutral");
      return r;
    }
    for (std::size_t i = 0; i < d1.size(); ++i) {
      if (d1[i].center != d2[i].center || d1[i].score != d2[i].score ||
          d1[i].dims != d2[i].dims || d1[i].yaw != d2[i].yaw) {
        r.pass = false;
        r.detail = detail::fail_msg(opt.seed, t, "collapsed-identity augmentation changed a detection");
        return r;
      }
    }
  }
  return r;
}

inline CheckResult check_pipeline_determinism(const CheckOptions& opt) {
  CheckResult r;
  r.name = "pipeline.determinism";
  config::PipelineConfig cfg;
  cfg.scene.n_cameras = 3;
  cfg.scene.image_w = 128;
  cfg.scene.image_h = 64;
  cfg.scene.n_boxes_min = 1;
  cfg.scene.n_boxes_max = 4;
  cfg.scene.spawn_radius = 25.0;
  cfg.image_encoder.kind = encoder::EncoderKind::kDepthOracle;
  cfg.image_encoder.channels = 2;
  cfg.image_encoder.stride = 8;
  cfg.bins = view_transform::DepthBins(1.0, 31.0, 0.5);
  cfg.ida_enabled = true;
  cfg.ida.source_w = 128;
  cfg.ida.source_h = 64;
  cfg.ida.crop_w = 112;
  cfg.ida.crop_h = 48;
  cfg.ida.scale_min = 0.9;
  cfg.ida.scale_max = 1.05;
  cfg.bda_enabled = true;
  cfg.seed = opt.seed;
  cfg.validate();

  const int rounds = std::max(1, opt.trials / 20);
  for (int t = 0; t < rounds; ++t) {
    const auto s1 = scenegen::generate_scene(cfg.scene, opt.seed + t);
    const auto s2 = scenegen::generate_scene(cfg.scene, opt.seed + t);
    for (std::size_t ci = 0; ci < s1.cameras.size(); ++ci)
      if (s1.cameras[ci].image.data != s2.cameras[ci].image.data ||
          s1.cameras[ci].depth.data != s2.cameras[ci].depth.data) {
        r.pass = false;
        r.detail = detail::fail_msg(opt.seed, t, "scene generation is not deterministic");
        return r;
      }
    const auto d1 = pipeline::infer_sample(s1, cfg, static_cast<std::uint64_t>(t));
    const auto d2 = pipeline::infer_sample(s2, cfg, static_cast<std::uint64_t>(t));
    if (d1.size() != d2.size()) {
      r.pass = false;
      r.detail = detail::fail_msg(opt.seed, t, "inference is not deterministic");
      return r;
    }
    for (std::size_t i = 0; i < d1.size(); ++i)
      if (d1[i].center != d2[i].center || d1[i].score != d2[i].score) {
        r.pass = false;
        r.detail = detail::fail_msg(opt.seed, t, "inference is not deterministic");
        return r;
      }
  }
  return r;
}

// ---------------------------------------------------------------------------

inline std::vector<CheckResult> run_all(const CheckOptions& opt) {
  using Fn = std::function<CheckResult(const CheckOptions&)>;
  const std::vector<Fn> fns = {
      [](const CheckOptions& o) { return check_aug_unprojection_invariance(o); },
      [](const CheckOptions& o) { return check_aug_inverse_roundtrip(o); },
      [](const CheckOptions& o) { return check_reprojection_roundtrip(o); },
      [](const CheckOptions& o) { return check_depth_weight_normalization(o); },
      [](const CheckOptions& o) { return check_mass_conservation(o); },
      [](const CheckOptions& o) { return check_kernel_equivalence(o); },
      [](const CheckOptions& o) { return check_splat_additivity(o); },
      [](const CheckOptions& o) { return check_flip_decoupling(o); },
      [](const CheckOptions& o) { return check_scale_rot_decoupling(o); },
      [](const CheckOptions& o) { return check_bda_joint_consistency(o); },
      [](const CheckOptions& o) { return check_bda_group_roundtrip(o); },
      [](const CheckOptions& o) { return check_ida_targets_untouched(o); },
      [](const CheckOptions& o) { return check_encoder_determinism(o); },
      [](const CheckOptions& o) { return check_encoder_shapes(o); },
      [](const CheckOptions& o) { return check_depth_oracle_footprint_mass(o); },
      [](const CheckOptions& o) { return check_codec_roundtrip(o); },
      [](const CheckOptions& o) { return check_decode_permutation_invariance(o); },
      [](const CheckOptions& o) { return check_yaw_recovery(o); },
      [](const CheckOptions& o) { return check_nds_golden_rows(o); },
      [](const CheckOptions& o) { return check_ap_monotonicity(o); },
      [](const CheckOptions& o) { return check_match_permutation_invariance(o); },
      [](const CheckOptions& o) { return check_self_eval_zero(o); },
      [](const CheckOptions& o) { return check_silhouette_unprojection(o); },
      [](const CheckOptions& o) { return check_footprints_disjoint(o); },
      [](const CheckOptions& o) { return check_identity_collapse(o); },
      [](const CheckOptions& o) { return check_pipeline_determinism(o); },
  };
  std::vector<CheckResult> results;
  results.reserve(fns.size());
  for (const Fn& fn : fns) results.push_back(fn(opt));
  return results;
}

}  // namespace bevkit::checks
