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
#include <utility>
#include <vector>

#include "bevkit/box.hpp"
#include "bevkit/common.hpp"
#include "bevkit/geometry.hpp"
#include "bevkit/rng.hpp"
#include "bevkit/tensor.hpp"

// Deterministic synthetic scenes: a ring rig of pinhole cameras at the ego
// origin, boxes with disjoint footprints, flat-shaded box silhouettes keyed
// by class, and per-pixel ground-truth z-depth (0 where no surface). Every
// end-to-end test in the project runs on these.

namespace bevkit::scenegen {

using geometry::CameraIntrinsics;
using geometry::Pose3D;

struct Camera {
  CameraIntrinsics intrinsics;
  Pose3D pose;  // ego from camera
};

struct CameraFrame {
  CameraIntrinsics intrinsics;
  Pose3D pose;
  Tensor3 image;  // (H, W, 3), flat shading keyed by class
  Tensor2 depth;  // (H, W), camera-frame z of nearest surface, 0 elsewhere
};

struct SceneSample {
  std::string sample_id;
  std::uint64_t seed = 0;
  std::vector<CameraFrame> cameras;
  DetectionSet boxes;  // ground truth, score 1.0
};

struct SceneConfig {
  int n_cameras = 6;
  int image_w = 704, image_h = 256;
  double fov_deg = 70.0;  // horizontal
  int n_boxes_min = 1, n_boxes_max = 8;
  double spawn_radius = 45.0;   // boxes inside this ego-centric disk
  double spawn_min_range = 8.0; // and outside this one
  double min_spacing = 9.0;     // center-to-center floor between boxes
  // Minimum ego-bearing separation between boxes; nonzero rules out
  // inter-box occlusion, which oracle-driven end-to-end tests rely on.
  double min_bearing_sep_deg = 0.0;
  Vec3 dims_min{1.4, 1.4, 1.6};
  Vec3 dims_max{2.2, 2.2, 2.4};
  double z_center_min = -0.5, z_center_max = 1.0;
  double speed_max = 10.0;
  int n_classes = 1;
  int n_attributes = 4;

  void validate() const {
    if (n_cameras < 1) throw ConfigError("scene: need at least one camera");
    if (image_w < 1 || image_h < 1) throw ConfigError("scene: image size must be positive");
    if (!(fov_deg > 1.0 && fov_deg < 179.0)) throw ConfigError("scene: fov out of range");
    if (n_boxes_min < 0 || n_boxes_max < n_boxes_min)
      throw ConfigError("scene: box count range must be ordered");
    if (!(spawn_radius > spawn_min_range) || !(spawn_min_range >= 0.0))
      throw ConfigError("scene: spawn region must be a nonempty annulus");
    for (int k = 0; k < 3; ++k)
      if (!(dims_min[k] > 0.0) || dims_max[k] < dims_min[k])
        throw ConfigError("scene: dims range must be ordered and positive");
    if (n_classes < 1) throw ConfigError("scene: need at least one class");
  }
};

/// Ego-from-camera pose of a horizontally mounted camera heading along ego
/// yaw. Camera axes: x right, y down, z forward; ego axes: x forward,
/// y left, z up.
inline Pose3D ring_camera_pose(double yaw, const Vec3& translation = Vec3::Zero()) {
  const double c = std::cos(yaw), s = std::sin(yaw);
  // Columns: camera x (image right), camera y (image down), camera z
  // (optical axis) expressed in the ego frame.
  Mat3 r;
  r << s, 0.0, c,
      -c, 0.0, s,
      0.0, -1.0, 0.0;
  return Pose3D(r, translation);
}

/// Evenly spaced ring of cameras at the ego origin; camera i looks along ego
/// yaw i * 2pi / n.
inline std::vector<Camera> make_rig(int n_cameras, double fov_deg, int image_w, int image_h) {
  if (n_cameras < 1) throw std::invalid_argument("make_rig: need at least one camera");
  const double fx = (image_w / 2.0) / std::tan(deg_to_rad(fov_deg) / 2.0);
  const double cx = (image_w - 1.0) / 2.0;
  const double cy = (image_h - 1.0) / 2.0;
  const CameraIntrinsics k = CameraIntrinsics::from_pinhole(fx, fx, cx, cy);

  std::vector<Camera> rig;
  rig.reserve(n_cameras);
  for (int i = 0; i < n_cameras; ++i)
    rig.push_back(Camera{k, ring_camera_pose(2.0 * kPi * i / n_cameras)});
  return rig;
}

namespace detail {

/// First intersection of the pixel ray with the box, parameterized by
/// camera-frame z so the hit parameter IS the stored depth. Slab test in the
/// box frame; returns depth <= 0 when there is no hit in front.
inline double ray_box_depth(const Vec3& dir_ego, const Vec3& cam_origin_ego, const Box3D& box) {
  const double c = std::cos(box.yaw), s = std::sin(box.yaw);
  // ego -> box frame (x along heading/length, y along width, z up)
  const Vec3 rel = cam_origin_ego - box.center;
  const Vec3 o(c * rel.x() + s * rel.y(), -s * rel.x() + c * rel.y(), rel.z());
  const Vec3 d(c * dir_ego.x() + s * dir_ego.y(), -s * dir_ego.x() + c * dir_ego.y(), dir_ego.z());
  const double half[3] = {0.5 * box.dims.y(), 0.5 * box.dims.x(), 0.5 * box.dims.z()};

  double t_enter = 0.0, t_exit = 1e300;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-12) {
      if (std::abs(o[a]) > half[a]) return 0.0;
      continue;
    }
    double t0 = (-half[a] - o[a]) / d[a];
    double t1 = (half[a] - o[a]) / d[a];
    if (t0 > t1) std::swap(t0, t1);
    t_enter = std::max(t_enter, t0);
    t_exit = std::min(t_exit, t1);
    if (t_enter > t_exit) return 0.0;
  }
  return t_enter > 1e-9 ? t_enter : 0.0;
}

inline void class_color(int class_id, double rgb[3]) {
  SeedStream s(static_cast<std::uint64_t>(class_id) + 1, "palette");
  for (int c = 0; c < 3; ++c) rgb[c] = 0.3 + 0.7 * s.next_unit();
}

/// Painter's-style render of one box into a camera frame: iterate the pixel
/// bounding box of the projected corners and ray-cast, keeping the nearest
/// depth per pixel.
inline void render_box(const Camera& cam, const Box3D& box, Tensor3& image, Tensor2& depth) {
  const auto h = static_cast<std::int64_t>(image.d0);
  const auto w = static_cast<std::int64_t>(image.d1);
  const Mat3& k = cam.intrinsics.matrix();
  const Mat3& kinv = cam.intrinsics.inverse();
  const Mat3& r_ec = cam.pose.rotation();

  // 8 corners, ego frame
  const double cy = std::cos(box.yaw), sy = std::sin(box.yaw);
  std::int64_t x0 = w, x1 = -1, y0 = h, y1 = -1;
  for (int m = 0; m < 8; ++m) {
    const double lx = ((m & 1) ? 0.5 : -0.5) * box.dims.y();
    const double ly = ((m & 2) ? 0.5 : -0.5) * box.dims.x();
    const double lz = ((m & 4) ? 0.5 : -0.5) * box.dims.z();
    const Vec3 ego = box.center + Vec3(cy * lx - sy * ly, sy * lx + cy * ly, lz);
    const Vec3 camp = r_ec.transpose() * (ego - cam.pose.translation());
    if (camp.z() < 0.1) return;  // straddles the image plane; a neighbor camera covers it
    const Vec3 pix = k * camp;
    const double u = pix.x() / pix.z(), v = pix.y() / pix.z();
    x0 = std::min(x0, static_cast<std::int64_t>(std::floor(u)));
    x1 = std::max(x1, static_cast<std::int64_t>(std::ceil(u)));
    y0 = std::min(y0, static_cast<std::int64_t>(std::floor(v)));
    y1 = std::max(y1, static_cast<std::int64_t>(std::ceil(v)));
  }
  x0 = std::max<std::int64_t>(x0, 0);
  y0 = std::max<std::int64_t>(y0, 0);
  x1 = std::min(x1, w - 1);
  y1 = std::min(y1, h - 1);
  if (x0 > x1 || y0 > y1) return;

  double rgb[3];
  class_color(box.class_id, rgb);
  const Vec3 origin = cam.pose.translation();
  for (std::int64_t v = y0; v <= y1; ++v) {
    for (std::int64_t u = x0; u <= x1; ++u) {
      // Ray with unit camera z so the slab parameter equals the z-depth.
      const Vec3 dir_cam = kinv * Vec3(static_cast<double>(u), static_cast<double>(v), 1.0);
      const Vec3 dir_ego = r_ec * dir_cam;
      const double hit = ray_box_depth(dir_ego, origin, box);
      if (hit <= 0.0) continue;
      double& dcell = depth(static_cast<std::size_t>(v), static_cast<std::size_t>(u));
      if (dcell > 0.0 && dcell <= hit) continue;
      dcell = hit;
      for (int ch = 0; ch < 3; ++ch)
        image(static_cast<std::size_t>(v), static_cast<std::size_t>(u), static_cast<std::size_t>(ch)) =
            rgb[ch];
    }
  }
}

}  // namespace detail

/// Fully reproducible synthetic sample: rig + boxes + rendered silhouettes
/// and ground-truth depth. Boxes are placed by rejection sampling until all
/// pairwise spacing constraints hold.
inline SceneSample generate_scene(const SceneConfig& cfg, std::uint64_t seed,
                                  const std::string& sample_id = "") {
  cfg.validate();
  SeedStream stream(seed, "scenegen");
  SceneSample sample;
  sample.seed = seed;
  sample.sample_id = sample_id;

  const auto rig = make_rig(cfg.n_cameras, cfg.fov_deg, cfg.image_w, cfg.image_h);

  const int n_boxes = static_cast<int>(stream.uniform_int(cfg.n_boxes_min, cfg.n_boxes_max));
  const int max_attempts = 100 * std::max(1, n_boxes);
  int attempts = 0;
  while (static_cast<int>(sample.boxes.size()) < n_boxes) {
    if (++attempts > max_attempts)
      throw GenerationError("generate_scene: spawn region cannot fit the requested boxes");
    Box3D b;
    const double ang = stream.uniform(0.0, 2.0 * kPi);
    const double rad = stream.uniform(cfg.spawn_min_range, cfg.spawn_radius);
    b.center = Vec3(rad * std::cos(ang), rad * std::sin(ang),
                    stream.uniform(cfg.z_center_min, cfg.z_center_max));
    b.dims = Vec3(stream.uniform(cfg.dims_min.x(), cfg.dims_max.x()),
                  stream.uniform(cfg.dims_min.y(), cfg.dims_max.y()),
                  stream.uniform(cfg.dims_min.z(), cfg.dims_max.z()));
    b.yaw = wrap_angle(stream.uniform(-kPi, kPi));
    const double sp_ang = stream.uniform(0.0, 2.0 * kPi);
    const double sp = stream.uniform(0.0, cfg.speed_max);
    b.velocity = Vec2(sp * std::cos(sp_ang), sp * std::sin(sp_ang));
    b.class_id = static_cast<int>(stream.uniform_int(0, cfg.n_classes - 1));
    b.attribute_id = static_cast<int>(stream.uniform_int(0, cfg.n_attributes - 1));
    b.score = 1.0;

    bool ok = true;
    for (const Box3D& other : sample.boxes) {
      const double d = std::hypot(b.center.x() - other.center.x(), b.center.y() - other.center.y());
      const double floor_d = std::max(
          cfg.min_spacing, 0.5 * (std::hypot(b.dims.x(), b.dims.y()) +
                                  std::hypot(other.dims.x(), other.dims.y())) + 0.5);
      if (d < floor_d) {
        ok = false;
        break;
      }
      if (cfg.min_bearing_sep_deg > 0.0) {
        const double db = wrap_angle(std::atan2(b.center.y(), b.center.x()) -
                                     std::atan2(other.center.y(), other.center.x()));
        if (std::abs(db) < deg_to_rad(cfg.min_bearing_sep_deg)) {
          ok = false;
          break;
        }
      }
    }
    if (ok) sample.boxes.push_back(b);
  }

  for (const Camera& cam : rig) {
    CameraFrame frame{cam.intrinsics, cam.pose,
                      Tensor3(cfg.image_h, cfg.image_w, 3, 0.0),
                      Tensor2(cfg.image_h, cfg.image_w, 0.0)};
    for (const Box3D& b : sample.boxes) detail::render_box(cam, b, frame.image, frame.depth);
    sample.cameras.push_back(std::move(frame));
  }
  return sample;
}

}  // namespace bevkit::scenegen
