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

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bevkit/box.hpp"
#include "bevkit/common.hpp"
#include "bevkit/metrics.hpp"
#include "bevkit/scenegen.hpp"
#include "bevkit/tensor.hpp"

// Versioned file formats. Scene rasters travel as base64 little-endian
// float32 with declared dtype and shape; calibration matrices as row-major
// tuples. Every file carries format_version and readers reject versions they
// do not know.

namespace bevkit::json_io {

using nlohmann::json;

inline constexpr int kFormatVersion = 1;

// ---------------------------------------------------------------------------
// base64

inline std::string base64_encode(const std::uint8_t* data, std::size_t len) {
  static const char* alphabet =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((len + 2) / 3 * 4);
  for (std::size_t i = 0; i < len; i += 3) {
    std::uint32_t chunk = static_cast<std::uint32_t>(data[i]) << 16;
    if (i + 1 < len) chunk |= static_cast<std::uint32_t>(data[i + 1]) << 8;
    if (i + 2 < len) chunk |= static_cast<std::uint32_t>(data[i + 2]);
    out.push_back(alphabet[(chunk >> 18) & 0x3f]);
    out.push_back(alphabet[(chunk >> 12) & 0x3f]);
    out.push_back(i + 1 < len ? alphabet[(chunk >> 6) & 0x3f] : '=');
    out.push_back(i + 2 < len ? alphabet[chunk & 0x3f] : '=');
  }
  return out;
}

inline std::vector<std::uint8_t> base64_decode(const std::string& text) {
  auto value_of = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    if (c == '=') return -1;
    throw IoError("base64: invalid character");
  };
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  std::uint32_t chunk = 0;
  int have = 0, pad = 0;
  for (char c : text) {
    const int v = value_of(c);
    if (v < 0) {
      ++pad;
      chunk <<= 6;
    } else {
      if (pad > 0) throw IoError("base64: data after padding");
      chunk = (chunk << 6) | static_cast<std::uint32_t>(v);
    }
    if (++have == 4) {
      out.push_back(static_cast<std::uint8_t>((chunk >> 16) & 0xff));
      if (pad < 2) out.push_back(static_cast<std::uint8_t>((chunk >> 8) & 0xff));
      if (pad < 1) out.push_back(static_cast<std::uint8_t>(chunk & 0xff));
      chunk = 0;
      have = 0;
    }
  }
  if (have != 0) throw IoError("base64: truncated input");
  return out;
}

// ---------------------------------------------------------------------------
// raster <-> base64 float32

inline json raster_to_json(const std::vector<double>& values, std::vector<std::size_t> shape) {
  std::vector<std::uint8_t> bytes(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const float f = static_cast<float>(values[i]);
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    bytes[i * 4 + 0] = static_cast<std::uint8_t>(u & 0xff);
    bytes[i * 4 + 1] = static_cast<std::uint8_t>((u >> 8) & 0xff);
    bytes[i * 4 + 2] = static_cast<std::uint8_t>((u >> 16) & 0xff);
    bytes[i * 4 + 3] = static_cast<std::uint8_t>((u >> 24) & 0xff);
  }
  return json{{"dtype", "float32"},
              {"byte_order", "little"},
              {"shape", shape},
              {"data", base64_encode(bytes.data(), bytes.size())}};
}

inline std::vector<double> raster_from_json(const json& j, std::vector<std::size_t>& shape_out) {
  if (j.at("dtype").get<std::string>() != "float32" ||
      j.at("byte_order").get<std::string>() != "little")
    throw SchemaError("raster: unsupported dtype or byte order");
  shape_out = j.at("shape").get<std::vector<std::size_t>>();
  std::size_t n = 1;
  for (std::size_t d : shape_out) n *= d;
  const std::vector<std::uint8_t> bytes = base64_decode(j.at("data").get<std::string>());
  if (bytes.size() != n * 4) throw SchemaError("raster: payload size does not match shape");
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t u = static_cast<std::uint32_t>(bytes[i * 4]) |
                            (static_cast<std::uint32_t>(bytes[i * 4 + 1]) << 8) |
                            (static_cast<std::uint32_t>(bytes[i * 4 + 2]) << 16) |
                            (static_cast<std::uint32_t>(bytes[i * 4 + 3]) << 24);
    float f;
    std::memcpy(&f, &u, 4);
    values[i] = static_cast<double>(f);
  }
  return values;
}

// ---------------------------------------------------------------------------
// boxes

inline json box_to_json(const Box3D& b) {
  return json{{"center", {b.center.x(), b.center.y(), b.center.z()}},
              {"dims", {b.dims.x(), b.dims.y(), b.dims.z()}},
              {"yaw", b.yaw},
              {"velocity", {b.velocity.x(), b.velocity.y()}},
              {"class_id", b.class_id},
              {"attribute_id", b.attribute_id},
              {"score", b.score}};
}

inline Box3D box_from_json(const json& j) {
  Box3D b;
  const auto c = j.at("center");
  b.center = Vec3(c.at(0), c.at(1), c.at(2));
  const auto d = j.at("dims");
  b.dims = Vec3(d.at(0), d.at(1), d.at(2));
  b.yaw = j.at("yaw");
  const auto v = j.at("velocity");
  b.velocity = Vec2(v.at(0), v.at(1));
  b.class_id = j.at("class_id");
  b.attribute_id = j.at("attribute_id");
  b.score = j.at("score");
  b.validate();
  return b;
}

// ---------------------------------------------------------------------------
// scenes

inline json scene_to_json(const scenegen::SceneSample& s) {
  json cams = json::array();
  for (const auto& cam : s.cameras) {
    json jc;
    const Mat3& k = cam.intrinsics.matrix();
    const Mat3& r = cam.pose.rotation();
    jc["intrinsics"] = {k(0, 0), k(0, 1), k(0, 2), k(1, 0), k(1, 1), k(1, 2), k(2, 0), k(2, 1), k(2, 2)};
    jc["rotation"] = {r(0, 0), r(0, 1), r(0, 2), r(1, 0), r(1, 1), r(1, 2), r(2, 0), r(2, 1), r(2, 2)};
    jc["translation"] = {cam.pose.translation().x(), cam.pose.translation().y(),
                         cam.pose.translation().z()};
    jc["image"] = raster_to_json(cam.image.data, {cam.image.d0, cam.image.d1, cam.image.d2});
    jc["depth"] = raster_to_json(cam.depth.data, {cam.depth.d0, cam.depth.d1});
    cams.push_back(std::move(jc));
  }
  json boxes = json::array();
  for (const Box3D& b : s.boxes) boxes.push_back(box_to_json(b));
  return json{{"format_version", kFormatVersion},
              {"sample_id", s.sample_id},
              {"seed", s.seed},
              {"cameras", std::move(cams)},
              {"boxes", std::move(boxes)}};
}

inline void check_version(const json& j, const char* what) {
  if (!j.contains("format_version"))
    throw SchemaError(std::string(what) + ": missing format_version");
  const int v = j.at("format_version");
  if (v != kFormatVersion)
    throw SchemaError(std::string(what) + ": unsupported format_version " + std::to_string(v));
}

inline scenegen::SceneSample scene_from_json(const json& j) {
  check_version(j, "scene");
  scenegen::SceneSample s;
  s.sample_id = j.at("sample_id");
  s.seed = j.at("seed");
  for (const json& jc : j.at("cameras")) {
    const auto kv = jc.at("intrinsics").get<std::vector<double>>();
    const auto rv = jc.at("rotation").get<std::vector<double>>();
    const auto tv = jc.at("translation").get<std::vector<double>>();
    if (kv.size() != 9 || rv.size() != 9 || tv.size() != 3)
      throw SchemaError("scene: malformed calibration");
    Mat3 k, r;
    k << kv[0], kv[1], kv[2], kv[3], kv[4], kv[5], kv[6], kv[7], kv[8];
    r << rv[0], rv[1], rv[2], rv[3], rv[4], rv[5], rv[6], rv[7], rv[8];

    std::vector<std::size_t> ishape, dshape;
    std::vector<double> image = raster_from_json(jc.at("image"), ishape);
    std::vector<double> depth = raster_from_json(jc.at("depth"), dshape);
    if (ishape.size() != 3 || dshape.size() != 2) throw SchemaError("scene: bad raster rank");

    scenegen::CameraFrame frame{geometry::CameraIntrinsics(k),
                                geometry::Pose3D(r, Vec3(tv[0], tv[1], tv[2])),
                                Tensor3(ishape[0], ishape[1], ishape[2]),
                                Tensor2(dshape[0], dshape[1])};
    frame.image.data = std::move(image);
    frame.depth.data = std::move(depth);
    s.cameras.push_back(std::move(frame));
  }
  for (const json& jb : j.at("boxes")) s.boxes.push_back(box_from_json(jb));
  return s;
}

// ---------------------------------------------------------------------------
// detection files: {format_version, config_hash, results: [{sample_id, detections}]}

struct SampleDetections {
  std::string sample_id;
  DetectionSet detections;
};

inline json detections_to_json(const std::vector<SampleDetections>& all,
                               const std::string& config_hash) {
  json results = json::array();
  for (const auto& s : all) {
    json dets = json::array();
    for (const Box3D& b : s.detections) dets.push_back(box_to_json(b));
    results.push_back(json{{"sample_id", s.sample_id}, {"detections", std::move(dets)}});
  }
  return json{{"format_version", kFormatVersion},
              {"config_hash", config_hash},
              {"results", std::move(results)}};
}

inline std::vector<SampleDetections> detections_from_json(const json& j) {
  check_version(j, "detections");
  std::vector<SampleDetections> out;
  for (const json& r : j.at("results")) {
    SampleDetections s;
    s.sample_id = r.at("sample_id");
    for (const json& jb : r.at("detections")) s.detections.push_back(box_from_json(jb));
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// eval result

inline json eval_to_json(const metrics::EvalResult& e) {
  json per_class = json::object();
  for (const auto& [cls, cr] : e.per_class) {
    json ap = json::object();
    for (const auto& [t, v] : cr.ap_by_threshold) ap[std::to_string(t)] = v;
    per_class[std::to_string(cls)] = json{{"ap_by_threshold", std::move(ap)},
                                          {"num_gts", cr.num_gts},
                                          {"ate", cr.errors.ate},
                                          {"ase", cr.errors.ase},
                                          {"aoe", cr.errors.aoe},
                                          {"ave", cr.errors.ave},
                                          {"aae", cr.errors.aae},
                                          {"empty_match_set", cr.errors.empty_match_set}};
  }
  json map_t = json::object();
  for (const auto& [t, v] : e.mean_ap_by_threshold) map_t[std::to_string(t)] = v;
  return json{{"format_version", kFormatVersion},
              {"per_class", std::move(per_class)},
              {"mean_ap", e.mean_ap},
              {"mean_ap_by_threshold", std::move(map_t)},
              {"mate", e.mean_errors.ate},
              {"mase", e.mean_errors.ase},
              {"maoe", e.mean_errors.aoe},
              {"mave", e.mean_errors.ave},
              {"maae", e.mean_errors.aae},
              {"any_empty_tp_set", e.any_empty_tp_set},
              {"nds", e.nds_score}};
}

// ---------------------------------------------------------------------------
// files

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << j.dump(2) << '\n';
  if (!f) throw IoError("write failed: " + path);
}

inline json read_json_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path);
  json j;
  try {
    f >> j;
  } catch (const json::parse_error& e) {
    throw IoError("parse error in " + path + ": " + e.what());
  }
  return j;
}

}  // namespace bevkit::json_io
