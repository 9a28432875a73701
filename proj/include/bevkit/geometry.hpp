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
#include <stdexcept>
#include <variant>
#include <vector>

#include "bevkit/common.hpp"

// Camera projection, pose composition, and the algebra that keeps image-space
// augmentation consistent with 3D unprojection. All types are immutable after
// construction and all operations are pure; everything here is safe to share
// across threads.
//
// Conventions, fixed once for the whole library:
//   - pixel (x, y) refers to the center of the pixel; a horizontal flip of a
//     width-W image maps x -> (W-1) - x
//   - camera frame: x right, y down, z forward (meters)
//   - intrinsics are stored unnormalized and are never folded together with
//     an augmentation transform; the two stay separate factors

namespace bevkit::geometry {

/// Pinhole intrinsics. Bottom row pinned to (0,0,1), positive focal lengths,
/// invertible; anything else is rejected at construction.
class CameraIntrinsics {
 public:
  explicit CameraIntrinsics(const Mat3& m) : matrix_(m) {
    if (!m.allFinite())
      throw std::invalid_argument("CameraIntrinsics: non-finite matrix");
    if (m(2, 0) != 0.0 || m(2, 1) != 0.0 || m(2, 2) != 1.0)
      throw std::invalid_argument("CameraIntrinsics: bottom row must be exactly (0,0,1)");
    if (!(m(0, 0) > 0.0) || !(m(1, 1) > 0.0))
      throw std::invalid_argument("CameraIntrinsics: fx and fy must be positive");
    if (std::abs(m.determinant()) < 1e-12)
      throw std::invalid_argument("CameraIntrinsics: singular matrix");
    inverse_ = m.inverse();
  }

  static CameraIntrinsics from_pinhole(double fx, double fy, double cx, double cy,
                                       double skew = 0.0) {
    Mat3 m;
    m << fx, skew, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
    return CameraIntrinsics(m);
  }

  const Mat3& matrix() const { return matrix_; }
  const Mat3& inverse() const { return inverse_; }
  double fx() const { return matrix_(0, 0); }
  double fy() const { return matrix_(1, 1); }
  double cx() const { return matrix_(0, 2); }
  double cy() const { return matrix_(1, 2); }

 private:
  Mat3 matrix_;
  Mat3 inverse_;
};

struct PixelPoint {
  double x = 0.0;
  double y = 0.0;
};

struct CameraPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3 vec() const { return {x, y, z}; }
};

// Elementary image-plane transforms, composed by compose_aug in application
// order. The canonical augmentation pipeline is flip -> scale -> rotate ->
// crop-translate.

/// x -> (width - 1) - x (pixel-center flip of a width-wide image).
struct FlipOp {
  double width;
};

/// p -> factor * p.
struct ScaleOp {
  double factor;
};

/// Rotate about an explicit pivot (pixel coordinates).
struct RotateOp {
  double angle_rad;
  Vec2 pivot{0.0, 0.0};
};

/// p -> p - offset (the crop window's top-left corner moves to the origin).
struct CropOp {
  Vec2 offset;
};

using AugOp = std::variant<FlipOp, ScaleOp, RotateOp, CropOp>;

/// Aggregate parameter record carried alongside the composed matrix.
struct AugParams {
  bool flip = false;
  double scale = 1.0;
  double rotation_rad = 0.0;
  Vec2 crop_offset{0.0, 0.0};
};

/// A 3x3 homogeneous image-plane transform with its parameter provenance.
/// Always affine here (bottom row (0,0,1)) and always invertible.
class AugTransform2D {
 public:
  static AugTransform2D identity() { return AugTransform2D(Mat3::Identity(), AugParams{}); }

  const Mat3& matrix() const { return matrix_; }
  const Mat3& inverse() const { return inverse_; }
  const AugParams& params() const { return params_; }

  Vec2 apply(const Vec2& p) const {
    const Vec3 q = matrix_ * Vec3(p.x(), p.y(), 1.0);
    return {q.x(), q.y()};
  }

  Vec2 apply_inverse(const Vec2& p) const {
    const Vec3 q = inverse_ * Vec3(p.x(), p.y(), 1.0);
    return {q.x(), q.y()};
  }

 private:
  AugTransform2D(const Mat3& m, const AugParams& p) : matrix_(m), params_(p) {
    if (!m.allFinite() || std::abs(m.determinant()) < 1e-12)
      throw std::invalid_argument("AugTransform2D: singular transform");
    inverse_ = m.inverse();
  }

  friend AugTransform2D compose_aug(const std::vector<AugOp>& ops);

  Mat3 matrix_;
  Mat3 inverse_;
  AugParams params_;
};

namespace detail {

inline Mat3 op_matrix(const AugOp& op) {
  Mat3 m = Mat3::Identity();
  if (const auto* f = std::get_if<FlipOp>(&op)) {
    m(0, 0) = -1.0;
    m(0, 2) = f->width - 1.0;
  } else if (const auto* s = std::get_if<ScaleOp>(&op)) {
    if (!(s->factor > 0.0))
      throw std::invalid_argument("compose_aug: scale factor must be positive");
    m(0, 0) = m(1, 1) = s->factor;
  } else if (const auto* r = std::get_if<RotateOp>(&op)) {
    const double c = std::cos(r->angle_rad), sn = std::sin(r->angle_rad);
    m(0, 0) = c;
    m(0, 1) = -sn;
    m(1, 0) = sn;
    m(1, 1) = c;
    const Vec2 t = r->pivot - Vec2(c * r->pivot.x() - sn * r->pivot.y(),
                                   sn * r->pivot.x() + c * r->pivot.y());
    m(0, 2) = t.x();
    m(1, 2) = t.y();
  } else if (const auto* cr = std::get_if<CropOp>(&op)) {
    m(0, 2) = -cr->offset.x();
    m(1, 2) = -cr->offset.y();
  }
  return m;
}

}  // namespace detail

/// Compose elementary transforms given in application order (the first list
/// entry acts on the image first). The aggregate params record reproduces the
/// matrix when ops follow the canonical flip -> scale -> rotate -> crop order,
/// which is the only order the samplers emit.
inline AugTransform2D compose_aug(const std::vector<AugOp>& ops) {
  Mat3 m = Mat3::Identity();
  AugParams params;
  for (const AugOp& op : ops) {
    m = detail::op_matrix(op) * m;
    if (std::holds_alternative<FlipOp>(op)) {
      params.flip = !params.flip;
    } else if (const auto* s = std::get_if<ScaleOp>(&op)) {
      params.scale *= s->factor;
    } else if (const auto* r = std::get_if<RotateOp>(&op)) {
      params.rotation_rad += r->angle_rad;
    } else if (const auto* c = std::get_if<CropOp>(&op)) {
      params.crop_offset += c->offset;
    }
  }
  return AugTransform2D(m, params);
}

/// Rigid ego-from-camera pose. Rotation must be orthonormal with det +1
/// within 1e-9.
class Pose3D {
 public:
  Pose3D(const Mat3& rotation, const Vec3& translation)
      : rotation_(rotation), translation_(translation) {
    if (!rotation.allFinite() || !translation.allFinite())
      throw std::invalid_argument("Pose3D: non-finite pose");
    if ((rotation * rotation.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9)
      throw std::invalid_argument("Pose3D: rotation is not orthonormal");
    if (std::abs(rotation.determinant() - 1.0) > 1e-9)
      throw std::invalid_argument("Pose3D: rotation determinant must be +1");
  }

  static Pose3D identity() { return Pose3D(Mat3::Identity(), Vec3::Zero()); }

  /// Rotation about ego z by yaw (camera axes unchanged otherwise).
  static Pose3D from_yaw(double yaw, const Vec3& translation = Vec3::Zero()) {
    const double c = std::cos(yaw), s = std::sin(yaw);
    Mat3 r;
    r << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
    return Pose3D(r, translation);
  }

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Vec3 transform(const Vec3& p) const { return rotation_ * p + translation_; }
  Vec3 inverse_transform(const Vec3& p) const { return rotation_.transpose() * (p - translation_); }

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

/// Back-project a pixel at depth d through the intrinsics:
/// p_camera = K^-1 * ([x, y, 1] * d). The z component equals d whenever the
/// stored skew is zero.
inline CameraPoint pixel_to_camera(const PixelPoint& p, double d, const CameraIntrinsics& k) {
  if (!(d > 0.0) || !std::isfinite(d))
    throw std::invalid_argument("pixel_to_camera: depth must be positive and finite");
  if (!std::isfinite(p.x) || !std::isfinite(p.y))
    throw std::invalid_argument("pixel_to_camera: non-finite pixel");
  const Vec3 q = k.inverse() * (Vec3(p.x, p.y, 1.0) * d);
  return {q.x(), q.y(), q.z()};
}

/// Back-project a pixel of an augmented image: the augmentation is undone in
/// the image plane before the intrinsics are inverted,
/// p_camera = K^-1 * (A^-1 * [x', y', 1] * d), so for p' = A p the result is
/// identical to pixel_to_camera(p, d, K).
inline CameraPoint unproject_augmented(const PixelPoint& p_aug, double d,
                                       const CameraIntrinsics& k, const AugTransform2D& a) {
  if (!(d > 0.0) || !std::isfinite(d))
    throw std::invalid_argument("unproject_augmented: depth must be positive and finite");
  const Vec3 undone = a.inverse() * Vec3(p_aug.x, p_aug.y, 1.0);
  const Vec3 q = k.inverse() * (undone * d);
  return {q.x(), q.y(), q.z()};
}

/// Camera-frame point into the ego frame: R p + t.
inline Vec3 camera_to_ego(const CameraPoint& p, const Pose3D& pose) {
  return pose.transform(p.vec());
}

/// Forward perspective projection, K p / z. Used by tests and the scene
/// renderer; inverse of pixel_to_camera for zero skew.
inline PixelPoint camera_to_pixel(const CameraPoint& p, const CameraIntrinsics& k) {
  if (!(p.z > 0.0)) throw std::invalid_argument("camera_to_pixel: point behind camera");
  const Vec3 q = k.matrix() * p.vec();
  return {q.x() / q.z(), q.y() / q.z()};
}

}  // namespace bevkit::geometry
