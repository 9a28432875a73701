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

#include <catch2/catch.hpp>

#include "bevkit/checks.hpp"
#include "bevkit/pipeline.hpp"

using namespace bevkit;

namespace {

config::PipelineConfig oracle_config() {
  config::PipelineConfig cfg;
  cfg.scene.n_cameras = 6;
  cfg.scene.image_w = 704;
  cfg.scene.image_h = 256;
  cfg.scene.fov_deg = 70.0;
  cfg.scene.spawn_radius = 35.0;
  cfg.scene.spawn_min_range = 8.0;
  cfg.scene.min_spacing = 9.0;
  cfg.scene.dims_min = Vec3(1.4, 1.4, 1.6);
  cfg.scene.dims_max = Vec3(2.2, 2.2, 2.4);
  cfg.image_encoder.kind = encoder::EncoderKind::kDepthOracle;
  cfg.image_encoder.channels = 1;
  cfg.bins = view_transform::DepthBins(1.0, 61.0, 0.5);
  cfg.head.score_thresh = 0.1;
  cfg.head.nms_radius = 4.0;
  cfg.head.nominal_dims = Vec3(1.8, 1.8, 2.0);
  cfg.validate();
  return cfg;
}

}  // namespace

TEST_CASE("blank scene decodes to an empty detection list") {
  auto cfg = oracle_config();
  cfg.scene.n_boxes_min = cfg.scene.n_boxes_max = 0;
  cfg.validate();
  const auto sample = scenegen::generate_scene(cfg.scene, 77);
  CHECK(pipeline::infer_sample(sample, cfg).empty());
}

TEST_CASE("depth-oracle pipeline finds a single box within two cells") {
  auto cfg = oracle_config();
  cfg.scene.n_boxes_min = cfg.scene.n_boxes_max = 1;
  cfg.validate();
  for (int seed = 1; seed <= 8; ++seed) {
    const auto sample = scenegen::generate_scene(cfg.scene, static_cast<std::uint64_t>(seed));
    REQUIRE(sample.boxes.size() == 1);
    const auto dets = pipeline::infer_sample(sample, cfg);
    REQUIRE_FALSE(dets.empty());
    const double d = std::hypot(dets[0].center.x() - sample.boxes[0].center.x(),
                                dets[0].center.y() - sample.boxes[0].center.y());
    CHECK(d < 2.0 * cfg.grid.cell);
  }
}

TEST_CASE("inference is deterministic across repeated runs") {
  auto cfg = oracle_config();
  cfg.scene.n_boxes_min = 2;
  cfg.scene.n_boxes_max = 4;
  cfg.validate();
  const auto sample = scenegen::generate_scene(cfg.scene, 123);
  const auto d1 = pipeline::infer_sample(sample, cfg, 0);
  const auto d2 = pipeline::infer_sample(sample, cfg, 0);
  REQUIRE(d1.size() == d2.size());
  for (std::size_t i = 0; i < d1.size(); ++i) {
    CHECK(d1[i].center == d2[i].center);
    CHECK(d1[i].score == d2[i].score);
  }
}

TEST_CASE("camera count mismatch is a config error") {
  auto cfg = oracle_config();
  cfg.scene.n_boxes_min = cfg.scene.n_boxes_max = 0;
  cfg.validate();
  auto sample = scenegen::generate_scene(cfg.scene, 3);
  sample.cameras.pop_back();
  CHECK_THROWS_AS(pipeline::infer_sample(sample, cfg), ConfigError);
}

TEST_CASE("detections come out sorted by score") {
  auto cfg = oracle_config();
  cfg.scene.n_boxes_min = 3;
  cfg.scene.n_boxes_max = 6;
  cfg.validate();
  const auto sample = scenegen::generate_scene(cfg.scene, 321);
  const auto dets = pipeline::infer_sample(sample, cfg);
  for (std::size_t i = 1; i < dets.size(); ++i) CHECK(dets[i - 1].score >= dets[i].score);
}

TEST_CASE("bev_mass_to_head_raster: empty feature gives empty heatmap") {
  const auto cfg = oracle_config();
  view_transform::BevFeature bev;
  bev.data = Tensor3(1, cfg.grid.nx(), cfg.grid.ny());
  const auto raster = pipeline::bev_mass_to_head_raster(bev, cfg.grid, cfg.head);
  CHECK(raster.heatmap.sum() == 0.0);
}

TEST_CASE("pipeline invariant checks pass") {
  checks::CheckOptions opt;
  opt.seed = 37;
  opt.trials = 40;
  CHECK(checks::check_identity_collapse(opt).pass);
  CHECK(checks::check_pipeline_determinism(opt).pass);
}
