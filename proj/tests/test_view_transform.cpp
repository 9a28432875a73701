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
#include "bevkit/rng.hpp"
#include "bevkit/view_transform.hpp"
#include "oracles.hpp"

using namespace bevkit;
using namespace bevkit::view_transform;

TEST_CASE("depth bins count and membership") {
  const DepthBins bins(1.0, 60.0, 1.0);
  CHECK(bins.count() == 59);
  CHECK(bins.bin_of(12.3) == 11);
  CHECK(bins.bin_of(0.5) == -1);
  CHECK(bins.bin_of(60.0) == -1);
  CHECK_THROWS_AS(DepthBins(0.0, 60.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(DepthBins(1.0, 60.0, 0.0), std::invalid_argument);
}

TEST_CASE("frustum single entry") {
  const auto f = build_frustum(DepthBins(1.0, 2.0, 1.0), 1, 1, 16);
  REQUIRE(f.lattice.size() == 1);
  CHECK(f.at(0, 0, 0).x() == Approx(8.0));
  CHECK(f.at(0, 0, 0).y() == Approx(8.0));
  CHECK(f.at(0, 0, 0).z() == Approx(1.5));
}

TEST_CASE("frustum depth axis is independent of pixel coordinates") {
  const auto f1 = build_frustum(DepthBins(1.0, 2.0, 1.0), 2, 3, 16);
  const auto f2 = build_frustum(DepthBins(1.0, 3.0, 1.0), 2, 3, 16);
  CHECK(f2.lattice.size() == 2 * f1.lattice.size());
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(f2.at(0, i, j).x() == f1.at(0, i, j).x());
      CHECK(f2.at(0, i, j).y() == f1.at(0, i, j).y());
      CHECK(f2.at(1, i, j).x() == f1.at(0, i, j).x());
    }
}

TEST_CASE("frustum matches the triple-loop oracle") {
  const DepthBins bins(2.0, 10.0, 2.0);
  const int stride = 8;
  const std::size_t h = 4, w = 5;
  const auto f = build_frustum(bins, h, w, stride);
  REQUIRE(f.lattice.size() == bins.count() * h * w);
  for (std::size_t k = 0; k < bins.count(); ++k)
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j) {
        CHECK(f.at(k, i, j).x() == (j + 0.5) * stride);
        CHECK(f.at(k, i, j).y() == (i + 0.5) * stride);
        CHECK(f.at(k, i, j).z() == bins.d_min + (k + 0.5) * bins.step);
      }
}

TEST_CASE("lift: uniform logits spread the feature evenly") {
  FeatureMap fm;
  fm.data = Tensor3(2, 1, 1);
  fm.data(0, 0, 0) = 1.0;
  fm.data(1, 0, 0) = 2.0;
  DepthLogits logits;
  logits.data = Tensor3(3, 1, 1, 0.5);
  const auto lifted = lift(fm, logits);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(lifted.weights(k, 0, 0) == Approx(1.0 / 3.0));
    CHECK(lifted.weights(k, 0, 0) * fm.data(0, 0, 0) == Approx(1.0 / 3.0));
    CHECK(lifted.weights(k, 0, 0) * fm.data(1, 0, 0) == Approx(2.0 / 3.0));
  }
}

TEST_CASE("lift: saturated logits one-hot the depth") {
  FeatureMap fm;
  fm.data = Tensor3(1, 1, 1);
  fm.data(0, 0, 0) = 4.25;
  DepthLogits logits;
  logits.data = Tensor3(5, 1, 1, -40.0);
  logits.data(2, 0, 0) = 40.0;
  const auto lifted = lift(fm, logits);
  CHECK(lifted.weights(2, 0, 0) * fm.data(0, 0, 0) == Approx(4.25).epsilon(1e-12));
  CHECK(lifted.weights(0, 0, 0) < 1e-30);
}

TEST_CASE("lift matches a scalar softmax oracle and conserves the feature") {
  SeedStream s(303, "lift");
  const std::size_t d = 7, h = 3, w = 4, c = 2;
  FeatureMap fm;
  fm.data = Tensor3(c, h, w);
  for (double& v : fm.data.data) v = s.uniform(-2.0, 2.0);
  DepthLogits logits;
  logits.data = Tensor3(d, h, w);
  for (double& v : logits.data.data) v = s.uniform(-20.0, 20.0);

  const auto lifted = lift(fm, logits);
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j) {
      // independent exp/normalize oracle, no max-shift
      long double denom = 0.0;
      for (std::size_t k = 0; k < d; ++k)
        denom += std::exp(static_cast<long double>(logits.data(k, i, j)));
      for (std::size_t k = 0; k < d; ++k) {
        const double want =
            static_cast<double>(std::exp(static_cast<long double>(logits.data(k, i, j))) / denom);
        CHECK(std::abs(lifted.weights(k, i, j) - want) < 1e-9);
      }
      for (std::size_t ch = 0; ch < c; ++ch) {
        double sum = 0.0, wsum = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
          sum += lifted.weights(k, i, j) * fm.data(ch, i, j);
          wsum += lifted.weights(k, i, j);
        }
        CHECK(std::abs(sum - wsum * fm.data(ch, i, j)) < 1e-12);
      }
    }
}

TEST_CASE("lift rejects non-finite logits") {
  FeatureMap fm;
  fm.data = Tensor3(1, 1, 1, 1.0);
  DepthLogits logits;
  logits.data = Tensor3(2, 1, 1, 0.0);
  logits.data(0, 0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(lift(fm, logits), std::invalid_argument);
}

namespace {

PointFeatureCloud one_point_cloud(const Vec3& pos, double weight, std::vector<double> feature) {
  PointFeatureCloud c;
  c.channels = feature.size();
  c.positions = {pos};
  c.weights = {weight};
  c.features = std::move(feature);
  return c;
}

}  // namespace

TEST_CASE("splat: single point lands in its floor cell") {
  const BevGrid grid;
  const auto bev = splat_naive(one_point_cloud({0.4, 0.4, 1.0}, 1.0, {2.0}), grid);
  CHECK(bev.data(0, 64, 64) == Approx(2.0));
  CHECK(bev.data.sum() == Approx(2.0));
}

TEST_CASE("splat: same-cell points sum") {
  const BevGrid grid;
  auto cloud = one_point_cloud({0.4, 0.4, 1.0}, 1.0, {1.0});
  cloud.append(one_point_cloud({0.5, 0.3, -1.0}, 1.0, {3.0}));
  const auto bev = splat_naive(cloud, grid);
  CHECK(bev.data(0, 64, 64) == Approx(4.0));
}

TEST_CASE("splat: points at the max edge and outside the z window drop") {
  const BevGrid grid;
  auto cloud = one_point_cloud({51.2, 0.0, 1.0}, 1.0, {2.0});
  CHECK(splat_naive(cloud, grid).data.sum() == 0.0);
  cloud = one_point_cloud({0.0, 0.0, 3.5}, 1.0, {2.0});
  CHECK(splat_naive(cloud, grid).data.sum() == 0.0);
  cloud = one_point_cloud({0.0, 0.0, 3.0}, 1.0, {2.0});  // closed z top
  CHECK(splat_naive(cloud, grid).data.sum() == Approx(2.0));
}

TEST_CASE("splat_sorted equals splat_naive") {
  const BevGrid grid;
  SeedStream s(404, "kernels");

  SECTION("single point and same-cell pairs") {
    auto cloud = one_point_cloud({0.4, 0.4, 1.0}, 1.0, {2.0});
    const auto a = splat_naive(cloud, grid);
    const auto b = splat_sorted(cloud, grid);
    CHECK(a.data.data == b.data.data);
  }

  SECTION("empty cloud gives a zero raster") {
    PointFeatureCloud empty;
    empty.channels = 3;
    const auto b = splat_sorted(empty, grid);
    CHECK(b.data.sum() == 0.0);
    CHECK(b.data.d0 == 3);
  }

  SECTION("100k random points within 1e-6 per cell") {
    PointFeatureCloud cloud;
    const std::size_t n = 100000;
    cloud.channels = 3;
    for (std::size_t i = 0; i < n; ++i) {
      cloud.positions.emplace_back(s.uniform(-60, 60), s.uniform(-60, 60), s.uniform(-6, 4));
      cloud.weights.push_back(s.next_unit());
      for (int c = 0; c < 3; ++c) cloud.features.push_back(s.uniform(0.0, 2.0));
    }
    const auto a = splat_naive(cloud, grid);
    const auto b = splat_sorted(cloud, grid);
    double worst = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
      worst = std::max(worst, rel_err(a.data.data[i], b.data.data[i]));
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("splat_sorted is bitwise deterministic for a fixed input ordering") {
  const BevGrid grid;
  SeedStream s(505, "det");
  PointFeatureCloud cloud;
  cloud.channels = 2;
  for (int i = 0; i < 5000; ++i) {
    cloud.positions.emplace_back(s.uniform(-52, 52), s.uniform(-52, 52), s.uniform(-5, 3));
    cloud.weights.push_back(s.next_unit());
    cloud.features.push_back(s.uniform(0.0, 1.0));
    cloud.features.push_back(s.uniform(0.0, 1.0));
  }
  const auto a = splat_sorted(cloud, grid);
  const auto b = splat_sorted(cloud, grid);
  CHECK(a.data.data == b.data.data);
}

TEST_CASE("splat_sorted output is independent of the worker count") {
  const BevGrid grid;
  SeedStream s(506, "jobs");
  PointFeatureCloud cloud;
  cloud.channels = 3;
  for (int i = 0; i < 120000; ++i) {
    cloud.positions.emplace_back(s.uniform(-60, 60), s.uniform(-60, 60), s.uniform(-6, 4));
    cloud.weights.push_back(s.next_unit());
    for (int c = 0; c < 3; ++c) cloud.features.push_back(s.uniform(0.0, 1.0));
  }
  const auto j1 = splat_sorted(cloud, grid, 1);
  const auto j2 = splat_sorted(cloud, grid, 2);
  const auto j5 = splat_sorted(cloud, grid, 5);
  CHECK(j1.data.data == j2.data.data);
  CHECK(j1.data.data == j5.data.data);
}

TEST_CASE("render_points: principal pixel at depth lands on the optical axis") {
  const DepthBins bins(9.0, 11.0, 2.0);  // one bin centered at 10
  const int stride = 16;
  const std::size_t h = 1, w = 1;
  const auto k = geometry::CameraIntrinsics::from_pinhole(500, 500, 8.0, 8.0);
  FeatureMap fm;
  fm.data = Tensor3(1, h, w, 3.0);
  fm.stride = stride;
  DepthLogits logits;
  logits.data = Tensor3(1, h, w, 0.0);
  const auto lifted = lift(fm, logits);
  const auto frustum = build_frustum(bins, h, w, stride);
  const auto cloud = render_points(lifted, frustum, k, geometry::Pose3D::identity(),
                                   geometry::AugTransform2D::identity());
  REQUIRE(cloud.size() == 1);
  CHECK(cloud.positions[0].x() == Approx(0.0).margin(1e-12));
  CHECK(cloud.positions[0].y() == Approx(0.0).margin(1e-12));
  CHECK(cloud.positions[0].z() == Approx(10.0));
  CHECK(cloud.weights[0] == Approx(1.0));
  CHECK(cloud.features[0] == Approx(3.0));
}

TEST_CASE("render_points matches the per-point geometry oracle") {
  SeedStream s(606, "render");
  const DepthBins bins(1.0, 13.0, 3.0);
  const int stride = 8;
  const std::size_t h = 4, w = 6, c = 2;
  const auto k = geometry::CameraIntrinsics::from_pinhole(s.uniform(300, 900), s.uniform(300, 900),
                                                          s.uniform(20, 28), s.uniform(12, 20));
  const auto pose = geometry::Pose3D::from_yaw(s.uniform(0.0, 2.0 * kPi), Vec3(0.5, -0.25, 0.1));
  const auto aug = geometry::compose_aug({geometry::ScaleOp{0.5}, geometry::CropOp{Vec2(3, 1)}});

  FeatureMap fm;
  fm.data = Tensor3(c, h, w);
  fm.stride = stride;
  for (double& v : fm.data.data) v = s.uniform(-1.0, 1.0);
  DepthLogits logits;
  logits.data = Tensor3(bins.count(), h, w);
  for (double& v : logits.data.data) v = s.uniform(-3.0, 3.0);

  const auto lifted = lift(fm, logits);
  const auto frustum = build_frustum(bins, h, w, stride);
  const auto cloud = render_points(lifted, frustum, k, pose, aug);
  REQUIRE(cloud.size() == bins.count() * h * w);

  std::size_t idx = 0;
  for (std::size_t kk = 0; kk < bins.count(); ++kk)
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j, ++idx) {
        const auto cam = geometry::unproject_augmented({(j + 0.5) * stride, (i + 0.5) * stride},
                                                       bins.bin_center(kk), k, aug);
        const Vec3 want = geometry::camera_to_ego(cam, pose);
        CHECK((cloud.positions[idx] - want).norm() < 1e-9 * std::max(1.0, want.norm()));
        CHECK(cloud.weights[idx] == lifted.weights(kk, i, j));
        for (std::size_t ch = 0; ch < c; ++ch)
          CHECK(cloud.features[idx * c + ch] == fm.data(ch, i, j));
      }
}

TEST_CASE("view_transform: one camera reduces to render plus splat") {
  SeedStream s(707, "vt1");
  const DepthBins bins(1.0, 21.0, 4.0);
  const BevGrid grid;
  auto scene = checks::detail::make_flip_scene(s, bins);
  const auto via_vt = bevkit::view_transform::view_transform({scene.original}, grid, bins);

  const auto frustum = build_frustum(bins, scene.original.features.data.d1,
                                     scene.original.features.data.d2, scene.original.features.stride);
  const auto lifted = lift(scene.original.features, scene.original.logits);
  const auto cloud = render_points(lifted, frustum, scene.original.intrinsics, scene.original.pose,
                                   scene.original.aug);
  const auto direct = splat_sorted(cloud, grid);
  CHECK(via_vt.data.data == direct.data.data);
}

TEST_CASE("view_transform: multi-camera output matches the per-camera-then-sum oracle") {
  SeedStream s(808, "vt6");
  const DepthBins bins(1.0, 21.0, 4.0);
  const BevGrid grid;
  std::vector<CameraInput> cams;
  for (int i = 0; i < 6; ++i) cams.push_back(checks::detail::make_flip_scene(s, bins).original);

  const auto whole = bevkit::view_transform::view_transform(cams, grid, bins);
  Tensor3 acc(whole.data.d0, whole.data.d1, whole.data.d2);
  for (const auto& cam : cams) {
    const auto single = bevkit::view_transform::view_transform({cam}, grid, bins);
    for (std::size_t i = 0; i < acc.size(); ++i) acc.data[i] += single.data.data[i];
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < acc.size(); ++i)
    worst = std::max(worst, rel_err(acc.data[i], whole.data.data[i]));
  CHECK(worst < 1e-6);
}

TEST_CASE("view_transform requires at least one camera") {
  CHECK_THROWS_AS(bevkit::view_transform::view_transform({}, BevGrid{}, DepthBins(1, 2, 1)),
                  ConfigError);
}

TEST_CASE("grid cell arithmetic") {
  const BevGrid grid;
  CHECK(grid.nx() == 128);
  CHECK(grid.ny() == 128);
  BevGrid bad = grid;
  bad.cell = 0.7;  // 102.4 / 0.7 is not an integer
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("view_transform invariant checks pass") {
  checks::CheckOptions opt;
  opt.seed = 11;
  opt.trials = 40;
  CHECK(checks::check_depth_weight_normalization(opt).pass);
  CHECK(checks::check_mass_conservation(opt).pass);
  CHECK(checks::check_kernel_equivalence(opt, 20000).pass);
  CHECK(checks::check_splat_additivity(opt).pass);
  CHECK(checks::check_flip_decoupling(opt).pass);
  CHECK(checks::check_scale_rot_decoupling(opt).pass);
}
