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
#include "bevkit/geometry.hpp"
#include "bevkit/rng.hpp"
#include "oracles.hpp"

using namespace bevkit;
using namespace bevkit::geometry;

TEST_CASE("intrinsics validation") {
  CHECK_NOTHROW(CameraIntrinsics::from_pinhole(1000, 1000, 800, 450));
  Mat3 bad = Mat3::Identity();
  bad(2, 2) = 2.0;
  CHECK_THROWS_AS(CameraIntrinsics(bad), std::invalid_argument);
  CHECK_THROWS_AS(CameraIntrinsics::from_pinhole(-1, 1000, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(CameraIntrinsics::from_pinhole(0, 1000, 0, 0), std::invalid_argument);
}

TEST_CASE("principal ray maps to the optical axis") {
  const auto k = CameraIntrinsics::from_pinhole(1000, 1000, 800, 450);
  const auto p = pixel_to_camera({800, 450}, 10.0, k);
  CHECK(p.x == Approx(0.0).margin(1e-15));
  CHECK(p.y == Approx(0.0).margin(1e-15));
  CHECK(p.z == Approx(10.0));
}

TEST_CASE("identity intrinsics scale the homogeneous pixel") {
  const CameraIntrinsics k(Mat3::Identity());
  const auto p = pixel_to_camera({1, 2}, 3.0, k);
  CHECK(p.x == Approx(3.0));
  CHECK(p.y == Approx(6.0));
  CHECK(p.z == Approx(3.0));
}

TEST_CASE("depth must be positive") {
  const CameraIntrinsics k(Mat3::Identity());
  CHECK_THROWS_AS(pixel_to_camera({1, 2}, 0.0, k), std::invalid_argument);
  CHECK_THROWS_AS(pixel_to_camera({1, 2}, -1.0, k), std::invalid_argument);
}

TEST_CASE("pixel_to_camera matches a Gaussian-elimination solve") {
  SeedStream s(101, "geom_oracle");
  for (int t = 0; t < 300; ++t) {
    const double fx = s.uniform(100, 2000), fy = s.uniform(100, 2000);
    const double cx = s.uniform(100, 1500), cy = s.uniform(100, 900);
    const double skew = s.uniform(-5, 5);
    const auto k = CameraIntrinsics::from_pinhole(fx, fy, cx, cy, skew);
    const double px = s.uniform(0, 1600), py = s.uniform(0, 900), d = s.uniform(0.1, 80);

    const auto got = pixel_to_camera({px, py}, d, k);
    const double km[3][3] = {{fx, skew, cx}, {0, fy, cy}, {0, 0, 1}};
    const auto want = oracle::unproject_by_solve(km, px, py, d);
    for (int i = 0; i < 3; ++i) {
      const double w = want[static_cast<std::size_t>(i)];
      const double g = i == 0 ? got.x : (i == 1 ? got.y : got.z);
      CHECK(std::abs(g - w) <= 1e-12 * std::max(1.0, std::abs(w)));
    }
  }
}

TEST_CASE("identity augmentation is a no-op in unprojection") {
  const auto k = CameraIntrinsics::from_pinhole(700, 720, 352, 128);
  const auto a = AugTransform2D::identity();
  const auto direct = pixel_to_camera({123.5, 87.25}, 7.5, k);
  const auto via = unproject_augmented({123.5, 87.25}, 7.5, k, a);
  CHECK(via.x == direct.x);
  CHECK(via.y == direct.y);
  CHECK(via.z == direct.z);
}

TEST_CASE("flip cancellation is exact") {
  const auto k = CameraIntrinsics::from_pinhole(700, 720, 352, 128);
  const auto flip = compose_aug({FlipOp{704.0}});
  const PixelPoint p{100, 50};
  const Vec2 p_aug = flip.apply(Vec2(p.x, p.y));
  CHECK(p_aug.x() == Approx(603.0));
  const auto direct = pixel_to_camera(p, 5.0, k);
  const auto via = unproject_augmented({p_aug.x(), p_aug.y()}, 5.0, k, flip);
  CHECK(via.x == direct.x);
  CHECK(via.y == direct.y);
  CHECK(via.z == direct.z);
}

TEST_CASE("scale-and-crop unprojection matches the two-step numeric oracle") {
  SeedStream s(202, "aug_oracle");
  const auto a = compose_aug({ScaleOp{0.48}, CropOp{Vec2(32, 176)}});
  for (int t = 0; t < 200; ++t) {
    const double fx = s.uniform(300, 1500), fy = s.uniform(300, 1500);
    const double cx = s.uniform(300, 1300), cy = s.uniform(200, 700);
    const auto k = CameraIntrinsics::from_pinhole(fx, fy, cx, cy);
    const double px = s.uniform(0, 704), py = s.uniform(0, 256), d = s.uniform(1, 60);

    const auto got = unproject_augmented({px, py}, d, k, a);

    // oracle: numerically invert A, undo it, then unproject by linear solve
    const Mat3& am = a.matrix();
    double amd[3][3], ainv[3][3];
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) amd[r][c] = am(r, c);
    oracle::invert3(amd, ainv);
    const auto undone = oracle::matvec3(ainv, {px, py, 1.0});
    const double km[3][3] = {{fx, 0, cx}, {0, fy, cy}, {0, 0, 1}};
    const auto want = oracle::unproject_by_solve(km, undone[0], undone[1], d);
    CHECK(std::abs(got.x - want[0]) <= 1e-12 * std::max(1.0, std::abs(want[0])));
    CHECK(std::abs(got.y - want[1]) <= 1e-12 * std::max(1.0, std::abs(want[1])));
    CHECK(std::abs(got.z - want[2]) <= 1e-12 * std::max(1.0, std::abs(want[2])));
  }
}

TEST_CASE("camera_to_ego composes rotation and translation") {
  CHECK((camera_to_ego({1, 2, 3}, Pose3D::identity()) - Vec3(1, 2, 3)).norm() == 0.0);
  CHECK((camera_to_ego({0, 0, 0}, Pose3D(Mat3::Identity(), Vec3(1, 2, 3))) - Vec3(1, 2, 3)).norm() ==
        0.0);
  const auto yaw90 = Pose3D::from_yaw(kPi / 2.0);
  CHECK((camera_to_ego({1, 0, 0}, yaw90) - Vec3(0, 1, 0)).norm() < 1e-12);
}

TEST_CASE("pose validation rejects non-rotations") {
  Mat3 m = Mat3::Identity();
  m(0, 0) = 2.0;
  CHECK_THROWS_AS(Pose3D(m, Vec3::Zero()), std::invalid_argument);
  Mat3 reflect = Mat3::Identity();
  reflect(0, 0) = -1.0;  // det -1
  CHECK_THROWS_AS(Pose3D(reflect, Vec3::Zero()), std::invalid_argument);
}

TEST_CASE("compose_aug basics") {
  const auto id = compose_aug({});
  CHECK((id.matrix() - Mat3::Identity()).norm() == 0.0);

  const auto scale2 = compose_aug({ScaleOp{2.0}});
  Mat3 want = Mat3::Identity();
  want(0, 0) = want(1, 1) = 2.0;
  CHECK((scale2.matrix() - want).norm() == 0.0);

  const auto ff = compose_aug({FlipOp{704.0}, FlipOp{704.0}});
  CHECK((ff.matrix() - Mat3::Identity()).norm() < 1e-12);
  CHECK_FALSE(ff.params().flip);

  CHECK_THROWS_AS(compose_aug({ScaleOp{0.0}}), std::invalid_argument);
}

TEST_CASE("compose_aug applies ops in list order") {
  // scale then crop: p -> 2p - (10, 0)
  const auto a = compose_aug({ScaleOp{2.0}, CropOp{Vec2(10, 0)}});
  const Vec2 q = a.apply(Vec2(7, 3));
  CHECK(q.x() == Approx(4.0));
  CHECK(q.y() == Approx(6.0));
}

TEST_CASE("rotation pivots are fixed points") {
  const Vec2 pivot(351.5, 127.5);
  const auto rot = compose_aug({RotateOp{0.3, pivot}});
  const Vec2 moved = rot.apply(pivot);
  CHECK((moved - pivot).norm() < 1e-12);
}

TEST_CASE("geometry invariant checks pass") {
  checks::CheckOptions opt;
  opt.seed = 7;
  opt.trials = 200;
  CHECK(checks::check_aug_unprojection_invariance(opt).pass);
  CHECK(checks::check_aug_inverse_roundtrip(opt).pass);
  CHECK(checks::check_reprojection_roundtrip(opt).pass);
}

TEST_CASE("a corrupted inverse-augmentation path is caught by the invariance check") {
  checks::CheckOptions opt;
  opt.seed = 7;
  opt.trials = 50;
  opt.corrupt_unprojection = true;
  CHECK_FALSE(checks::check_aug_unprojection_invariance(opt).pass);
}
