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
#include <string>
#include <vector>

#include "bevkit/augment.hpp"
#include "bevkit/box.hpp"
#include "bevkit/common.hpp"
#include "bevkit/config.hpp"
#include "bevkit/encoder.hpp"
#include "bevkit/head.hpp"
#include "bevkit/scenegen.hpp"
#include "bevkit/view_transform.hpp"

// One sample through the full stack: per-camera encoding (with optional
// image-view augmentation, undone during unprojection), view transformation,
// optional BEV-space augmentation replay, BEV encoding, threshold decoding,
// and distance NMS. Deterministic given (config, seed): each sample and each
// camera draws from its own named sub-stream.

namespace bevkit::pipeline {

using config::PipelineConfig;
using scenegen::SceneSample;
using view_transform::BevFeature;

/// Derive a HeadRaster from a BEV feature without trained weights. The
/// per-cell mass m (sum of |channel| values) is squashed to m / (1 + m) so
/// near and far objects both clear a fixed threshold; peak offsets come from
/// the local mass centroid; dims, z, and yaw fall back to configured
/// nominals. This is the "threshold decoding" input.
inline head::HeadRaster bev_mass_to_head_raster(const BevFeature& bev,
                                                const view_transform::BevGrid& grid,
                                                const config::HeadConfig& cfg) {
  const std::size_t nx = grid.nx(), ny = grid.ny();
  head::HeadRaster r = head::make_raster(static_cast<std::size_t>(cfg.num_classes), nx, ny);

  Tensor2 mass(nx, ny);
  for (std::size_t c = 0; c < bev.data.d0; ++c)
    for (std::size_t ix = 0; ix < nx; ++ix)
      for (std::size_t iy = 0; iy < ny; ++iy) mass(ix, iy) += std::abs(bev.data(c, ix, iy));

  const int rad = cfg.centroid_radius_cells;
  for (std::size_t ix = 0; ix < nx; ++ix) {
    for (std::size_t iy = 0; iy < ny; ++iy) {
      const double m = mass(ix, iy);
      if (m <= 0.0) continue;
      r.heatmap(0, ix, iy) = m / (1.0 + m);

      double wsum = 0.0, cx = 0.0, cy = 0.0;
      for (int du = -rad; du <= rad; ++du) {
        const std::int64_t u = static_cast<std::int64_t>(ix) + du;
        if (u < 0 || u >= static_cast<std::int64_t>(nx)) continue;
        for (int dv = -rad; dv <= rad; ++dv) {
          const std::int64_t v = static_cast<std::int64_t>(iy) + dv;
          if (v < 0 || v >= static_cast<std::int64_t>(ny)) continue;
          const double w = mass(static_cast<std::size_t>(u), static_cast<std::size_t>(v));
          wsum += w;
          cx += w * (static_cast<double>(u) + 0.5);
          cy += w * (static_cast<double>(v) + 0.5);
        }
      }
      r.offset(0, ix, iy) = cx / wsum - static_cast<double>(ix);
      r.offset(1, ix, iy) = cy / wsum - static_cast<double>(iy);
      r.z(0, ix, iy) = cfg.nominal_z;
      r.log_dims(0, ix, iy) = std::log(cfg.nominal_dims.x());
      r.log_dims(1, ix, iy) = std::log(cfg.nominal_dims.y());
      r.log_dims(2, ix, iy) = std::log(cfg.nominal_dims.z());
      // rot already defaults to (sin, cos) = (0, 1); velocity to zero
    }
  }
  return r;
}

struct InferTrace {
  BevFeature bev;                       // after BDA replay and BEV encoding
  augment::BdaTransform bda;            // identity params unless enabled
  std::vector<geometry::AugTransform2D> ida;  // one per camera
};

/// Run one sample. sample_index seeds the per-sample augmentation streams.
inline DetectionSet infer_sample(const SceneSample& sample, const PipelineConfig& cfg,
                                 std::uint64_t sample_index = 0, InferTrace* trace = nullptr) {
  if (static_cast<int>(sample.cameras.size()) != cfg.scene.n_cameras)
    throw ConfigError("infer: sample camera count does not match the configured rig");

  SeedStream ida_stream = SeedStream(cfg.seed, "ida").fork(sample_index);
  SeedStream bda_stream = SeedStream(cfg.seed, "bda").fork(sample_index);

  std::vector<view_transform::CameraInput> inputs;
  std::vector<geometry::AugTransform2D> ida_used;
  inputs.reserve(sample.cameras.size());

  for (std::size_t ci = 0; ci < sample.cameras.size(); ++ci) {
    const scenegen::CameraFrame& cam = sample.cameras[ci];
    geometry::AugTransform2D aug = geometry::AugTransform2D::identity();
    const Tensor3* img = &cam.image;
    const Tensor2* depth = &cam.depth;
    Tensor3 warped_img;
    Tensor2 warped_depth;

    if (cfg.ida_enabled) {
      SeedStream cam_stream = ida_stream.fork(ci);
      aug = augment::sample_ida(cfg.ida, cam_stream);
      warped_img = augment::apply_ida_image(cam.image, aug,
                                            static_cast<std::size_t>(cfg.ida.crop_h),
                                            static_cast<std::size_t>(cfg.ida.crop_w),
                                            cfg.ida.interp);
      // depth is never interpolated: blending two surfaces invents a third
      warped_depth = augment::apply_ida_raster(cam.depth, aug,
                                               static_cast<std::size_t>(cfg.ida.crop_h),
                                               static_cast<std::size_t>(cfg.ida.crop_w));
      img = &warped_img;
      depth = &warped_depth;
    }

    auto [fm, logits] = encoder::encode_image(*img, cfg.image_encoder, cfg.bins, depth);
    inputs.push_back(view_transform::CameraInput{std::move(fm), std::move(logits), cam.intrinsics,
                                                 cam.pose, aug});
    ida_used.push_back(aug);
  }

  BevFeature bev = view_transform::view_transform(inputs, cfg.grid, cfg.bins);

  augment::BdaTransform bda;  // identity
  if (cfg.bda_enabled) {
    bda = augment::sample_bda(cfg.bda, bda_stream);
    bev = augment::apply_bda_feature(bev, bda, cfg.grid, cfg.bda.interp);
  }

  bev = encoder::encode_bev(bev, cfg.bev_encoder);

  const head::HeadRaster raster = bev_mass_to_head_raster(bev, cfg.grid, cfg.head);
  DetectionSet dets = head::decode(raster, cfg.grid, cfg.head.max_dets, cfg.head.score_thresh);

  // Detections come out in the augmented frame; map them back to ego.
  if (cfg.bda_enabled && !bda.is_identity_params())
    dets = augment::apply_bda_boxes(dets, bda.inverse());

  dets = head::nms_distance(dets, {}, cfg.head.nms_radius);
  std::stable_sort(dets.begin(), dets.end(),
                   [](const Box3D& a, const Box3D& b) { return a.score > b.score; });

  if (trace != nullptr) {
    trace->bev = std::move(bev);
    trace->bda = bda;
    trace->ida = std::move(ida_used);
  }
  return dets;
}

}  // namespace bevkit::pipeline
