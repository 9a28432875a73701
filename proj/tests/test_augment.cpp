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

#include "bevkit/augment.hpp"
#include "bevkit/checks.hpp"
#include "bevkit/rng.hpp"

using namespace bevkit;
using namespace bevkit::augment;

TEST_CASE("collapsed ranges reproduce the deterministic eval-time transform") {
  IdaConfig cfg;
  cfg.flip_prob = 0.0;
  cfg.scale_min = cfg.scale_max = 0.48;
  cfg.rot_min_rad = cfg.rot_max_rad = 0.0;
  cfg.crop_horizontal_mode = CropHorizontalMode::kCenter;
  SeedStream s(1, "ida");
  const auto a = sample_ida(cfg, s);

  CHECK(a.params().scale == Approx(0.48));
  CHECK(a.params().rotation_rad == 0.0);
  CHECK_FALSE(a.params().flip);
  // crop region (x1, x2, y1, y2) = (32, 736, 176, 432) in scaled coordinates
  CHECK(a.params().crop_offset.x() == Approx(32.0));
  CHECK(a.params().crop_offset.y() == Approx(176.0));

  // source pixel at scaled position 32 becomes crop column 0
  const Vec2 left = a.apply(Vec2(32.0 / 0.48, 176.0 / 0.48));
  CHECK(left.x() == Approx(0.0).margin(1e-9));
  CHECK(left.y() == Approx(0.0).margin(1e-9));
  const Vec2 right = a.apply(Vec2(736.0 / 0.48, 432.0 / 0.48));
  CHECK(right.x() == Approx(704.0).margin(1e-9));
  CHECK(right.y() == Approx(256.0).margin(1e-9));
}

TEST_CASE("sample_ida is reproducible and respects its ranges") {
  IdaConfig cfg;
  SeedStream s1(42, "ida");
  SeedStream s2(42, "ida");
  const auto a1 = sample_ida(cfg, s1);
  const auto a2 = sample_ida(cfg, s2);
  CHECK(a1.matrix() == a2.matrix());

  SeedStream s(43, "ida");
  for (int t = 0; t < 10000; ++t) {
    const auto a = sample_ida(cfg, s);
    const auto& p = a.params();
    CHECK(p.scale >= cfg.scale_min);
    CHECK(p.scale <= cfg.scale_max);
    CHECK(p.rotation_rad >= cfg.rot_min_rad);
    CHECK(p.rotation_rad <= cfg.rot_max_rad);
    CHECK(p.crop_offset.x() >= 0.0);
    CHECK(p.crop_offset.x() <= std::max(0.0, cfg.scale_max * cfg.source_w - cfg.crop_w));
    CHECK(p.crop_offset.y() >= 0.0);
  }
}

TEST_CASE("vertical crop modes cover both published formulas") {
  IdaConfig cfg;
  cfg.flip_prob = 0.0;
  cfg.scale_min = cfg.scale_max = 0.48;
  cfg.rot_min_rad = cfg.rot_max_rad = 0.0;

  cfg.crop_vertical_mode = CropVerticalMode::kFixed;
  SeedStream s1(5, "ida");
  CHECK(sample_ida(cfg, s1).params().crop_offset.y() == Approx(176.0));

  cfg.crop_vertical_mode = CropVerticalMode::kBottom;
  SeedStream s2(5, "ida");
  // s*900 - 256 = 176 when s*900 >= 256; the formulas agree on this scale
  CHECK(sample_ida(cfg, s2).params().crop_offset.y() == Approx(176.0));

  // below the guard threshold the fixed mode clamps, the bottom mode goes negative
  cfg.scale_min = cfg.scale_max = 0.2;
  SeedStream s3(5, "ida");
  cfg.crop_vertical_mode = CropVerticalMode::kFixed;
  CHECK(sample_ida(cfg, s3).params().crop_offset.y() == 0.0);
  SeedStream s4(5, "ida");
  cfg.crop_vertical_mode = CropVerticalMode::kBottom;
  CHECK(sample_ida(cfg, s4).params().crop_offset.y() == Approx(-76.0));
}

TEST_CASE("apply_ida_image: identity, flip, involution") {
  SeedStream s(7, "warp");
  Tensor3 img(6, 8, 2);
  for (double& v : img.data) v = s.next_unit();

  const auto id = geometry::AugTransform2D::identity();
  CHECK(apply_ida_image(img, id, 6, 8).data == img.data);

  const auto flip = geometry::compose_aug({geometry::FlipOp{8.0}});
  const auto flipped = apply_ida_image(img, flip, 6, 8);
  for (std::size_t y = 0; y < 6; ++y)
    for (std::size_t x = 0; x < 8; ++x)
      for (std::size_t c = 0; c < 2; ++c) CHECK(flipped(y, x, c) == img(y, 7 - x, c));

  CHECK(apply_ida_image(flipped, flip, 6, 8).data == img.data);
}

TEST_CASE("bilinear warps blend neighbors and keep identity exact") {
  Tensor3 img(2, 4, 1);
  for (std::size_t x = 0; x < 4; ++x) {
    img(0, x, 0) = static_cast<double>(x);
    img(1, x, 0) = static_cast<double>(x) + 10.0;
  }
  const auto id = geometry::AugTransform2D::identity();
  CHECK(apply_ida_image(img, id, 2, 4, Interp::kBilinear).data == img.data);

  // shift by half a pixel: output x reads the average of x-1 and x
  const auto half = geometry::compose_aug({geometry::CropOp{Vec2(-0.5, 0.0)}});
  const auto out = apply_ida_image(img, half, 2, 4, Interp::kBilinear);
  CHECK(out(0, 2, 0) == Approx(1.5));
  CHECK(out(1, 3, 0) == Approx(12.5));

  // constant raster: bilinear identity reproduces interior cells (borders
  // may blend with the zero padding by an ulp of position)
  view_transform::BevGrid grid;
  view_transform::BevFeature f;
  f.data = Tensor3(1, grid.nx(), grid.ny(), 1.0);
  BdaTransform id_t;
  const auto same = apply_bda_feature(f, id_t, grid, Interp::kBilinear);
  for (std::size_t ix = 1; ix + 1 < grid.nx(); ++ix)
    for (std::size_t iy = 1; iy + 1 < grid.ny(); ++iy)
      CHECK(same.data(0, ix, iy) == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("apply_ida_image: out-of-bounds reads are zero") {
  Tensor3 img(4, 4, 1, 1.0);
  const auto crop = geometry::compose_aug({geometry::CropOp{Vec2(2, 0)}});
  const auto out = apply_ida_image(img, crop, 4, 4);
  CHECK(out(0, 0, 0) == 1.0);  // reads source column 2
  CHECK(out(0, 1, 0) == 1.0);
  CHECK(out(0, 2, 0) == 0.0);  // source column 4 does not exist
  CHECK(out(0, 3, 0) == 0.0);
}

TEST_CASE("sample_bda: collapsed ranges give the identity, 90 degrees is exact") {
  BdaConfig cfg;
  cfg.flip_prob = 0.0;
  cfg.rot_min_rad = cfg.rot_max_rad = 0.0;
  cfg.scale_min = cfg.scale_max = 1.0;
  SeedStream s(9, "bda");
  const auto t = sample_bda(cfg, s);
  CHECK(t.is_identity_params());
  CHECK((t.matrix() - Mat2::Identity()).norm() == 0.0);

  BdaTransform quarter;
  quarter.rotation_rad = kPi / 2.0;
  const Mat2 m = quarter.matrix();
  CHECK(m(0, 0) == Approx(0.0).margin(1e-15));
  CHECK(m(0, 1) == Approx(-1.0));
  CHECK(m(1, 0) == Approx(1.0));
  CHECK(m(1, 1) == Approx(0.0).margin(1e-15));

  SeedStream sa(10, "bda");
  SeedStream sb(10, "bda");
  BdaConfig full;
  const auto ta = sample_bda(full, sa);
  const auto tb = sample_bda(full, sb);
  CHECK(ta.rotation_rad == tb.rotation_rad);
  CHECK(ta.scale == tb.scale);
  CHECK(ta.flip_x == tb.flip_x);
}

TEST_CASE("apply_bda_feature: identity, x-flip reversal, exact quarter turn") {
  view_transform::BevGrid grid;
  SeedStream s(11, "bda_feat");
  view_transform::BevFeature f;
  f.data = Tensor3(2, grid.nx(), grid.ny());
  for (double& v : f.data.data) v = s.next_unit();

  BdaTransform id;
  CHECK(apply_bda_feature(f, id, grid).data.data == f.data.data);

  BdaTransform xflip;
  xflip.flip_x = true;
  const auto flipped = apply_bda_feature(f, xflip, grid);
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t ix = 0; ix < grid.nx(); ++ix)
      for (std::size_t iy = 0; iy < grid.ny(); ++iy)
        CHECK(flipped.data(c, ix, iy) == f.data(c, grid.nx() - 1 - ix, iy));

  // 90-degree rotation permutes cells one-to-one; verify against the index
  // permutation oracle (ix, iy) -> (nx-1-iy, ix)
  BdaTransform quarter;
  quarter.rotation_rad = kPi / 2.0;
  const auto turned = apply_bda_feature(f, quarter, grid);
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t ix = 0; ix < grid.nx(); ++ix)
      for (std::size_t iy = 0; iy < grid.ny(); ++iy)
        CHECK(turned.data(c, grid.nx() - 1 - iy, ix) == f.data(c, ix, iy));
}

TEST_CASE("apply_bda_feature rejects rotation on a non-centered grid") {
  view_transform::BevGrid grid;
  grid.x_min = 0.0;
  grid.x_max = 102.4;
  view_transform::BevFeature f;
  f.data = Tensor3(1, grid.nx(), grid.ny());
  BdaTransform rot;
  rot.rotation_rad = 0.3;
  CHECK_THROWS_AS(apply_bda_feature(f, rot, grid), ConfigError);
}

TEST_CASE("apply_bda_boxes action on centers, yaw, velocity, dims") {
  Box3D b;
  b.center = Vec3(3, 0, 1);
  b.dims = Vec3(1, 2, 3);
  b.yaw = 0.0;
  b.velocity = Vec2(1, 0);

  SECTION("quarter turn") {
    BdaTransform t;
    t.rotation_rad = kPi / 2.0;
    const auto out = apply_bda_boxes({b}, t)[0];
    CHECK(out.center.x() == Approx(0.0).margin(1e-12));
    CHECK(out.center.y() == Approx(3.0));
    CHECK(out.yaw == Approx(kPi / 2.0));
    CHECK(out.velocity.x() == Approx(0.0).margin(1e-12));
    CHECK(out.velocity.y() == Approx(1.0));
  }

  SECTION("y-flip") {
    Box3D c = b;
    c.center = Vec3(2, 5, 1);
    c.yaw = 0.7;
    c.velocity = Vec2(0.5, -0.25);
    BdaTransform t;
    t.flip_y = true;
    const auto out = apply_bda_boxes({c}, t)[0];
    CHECK(out.center.x() == Approx(2.0));
    CHECK(out.center.y() == Approx(-5.0));
    CHECK(out.yaw == Approx(-0.7));
    CHECK(out.velocity.x() == Approx(0.5));
    CHECK(out.velocity.y() == Approx(0.25));
    CHECK(out.dims == c.dims);
  }

  SECTION("x-flip sends yaw to pi - yaw") {
    Box3D c = b;
    c.yaw = 0.3;
    BdaTransform t;
    t.flip_x = true;
    const auto out = apply_bda_boxes({c}, t)[0];
    CHECK(out.yaw == Approx(kPi - 0.3));
  }

  SECTION("pure scale") {
    BdaTransform t;
    t.scale = 1.05;
    const auto out = apply_bda_boxes({b}, t)[0];
    CHECK(out.center.x() == Approx(3.0 * 1.05));
    CHECK(out.center.z() == Approx(1.0 * 1.05));
    CHECK(out.dims.x() == Approx(1.05));
    CHECK(out.dims.y() == Approx(2.1));
    CHECK(out.dims.z() == Approx(3.15));
    CHECK(out.velocity.x() == Approx(1.05));
    CHECK(out.yaw == Approx(0.0));
  }
}

TEST_CASE("augment invariant checks pass") {
  checks::CheckOptions opt;
  opt.seed = 13;
  opt.trials = 60;
  CHECK(checks::check_bda_joint_consistency(opt).pass);
  CHECK(checks::check_bda_group_roundtrip(opt).pass);
  CHECK(checks::check_ida_targets_untouched(opt).pass);
}
