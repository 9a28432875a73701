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
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bevkit/augment.hpp"
#include "bevkit/common.hpp"
#include "bevkit/encoder.hpp"
#include "bevkit/metrics.hpp"
#include "bevkit/rng.hpp"
#include "bevkit/scenegen.hpp"
#include "bevkit/view_transform.hpp"

// Pipeline configuration. The file format is nested key-value text:
// `[section]` headers, `key = value` lines, `#` comments, units spelled in
// key names (rot_min_deg, cell_m, ...). Unknown sections or keys are hard
// errors, not warnings.

namespace bevkit::config {

struct HeadConfig {
  double score_thresh = 0.1;
  std::size_t max_dets = 500;
  double nms_radius = 4.0;  // meters, all classes
  int gaussian_min_radius = 2;
  double gaussian_overlap = 0.1;
  int num_classes = 1;
  // Threshold-decoding bridge (no trained weights): nominal outputs and the
  // centroid window used to refine peak offsets.
  Vec3 nominal_dims{1.8, 1.8, 1.8};
  double nominal_z = 0.0;
  int centroid_radius_cells = 2;

  void validate() const {
    if (!(score_thresh >= 0.0 && score_thresh < 1.0))
      throw ConfigError("head: score_thresh must lie in [0, 1)");
    if (max_dets < 1) throw ConfigError("head: max_dets must be >= 1");
    if (!(nms_radius > 0.0)) throw ConfigError("head: nms_radius_m must be positive");
    if (gaussian_min_radius < 0) throw ConfigError("head: gaussian_min_radius must be >= 0");
    if (num_classes < 1) throw ConfigError("head: num_classes must be >= 1");
    if (!(nominal_dims.minCoeff() > 0.0)) throw ConfigError("head: nominal dims must be positive");
  }
};

/// Named channel presets. Width metadata only; no behavioral claim.
struct Preset {
  std::string name;
  int vt_channels;         // view-transformer feature channels
  int image_neck_channels; // metadata
  int bev_neck_channels;   // metadata
};

inline const std::vector<Preset>& presets() {
  static const std::vector<Preset> table = {
      {"sttiny", 64, 512, 256},
      {"r50", 80, 512, 256},
      {"r101", 64, 256, 128},
  };
  return table;
}

struct PipelineConfig {
  std::string preset = "custom";
  std::uint64_t seed = 0;

  view_transform::BevGrid grid;
  view_transform::DepthBins bins{1.0, 60.0, 1.0};

  encoder::EncoderSpec image_encoder;
  encoder::EncoderSpec bev_encoder{encoder::EncoderKind::kIdentity, 8, 16, 0, true};

  bool ida_enabled = false;
  augment::IdaConfig ida;
  bool bda_enabled = false;
  augment::BdaConfig bda;

  HeadConfig head;
  metrics::MetricConfig metric;
  scenegen::SceneConfig scene;

  void validate() const {
    grid.validate();
    image_encoder.validate_for_image();
    bev_encoder.validate_for_bev();
    ida.validate();
    bda.validate();
    head.validate();
    metric.validate();
    scene.validate();
    if (scene.image_w % image_encoder.stride != 0 || scene.image_h % image_encoder.stride != 0)
      throw ConfigError("config: scene image size must be divisible by the encoder stride");
    if (ida_enabled && (ida.crop_w % image_encoder.stride != 0 || ida.crop_h % image_encoder.stride != 0))
      throw ConfigError("config: ida crop size must be divisible by the encoder stride");
    if (ida_enabled && (ida.source_w != scene.image_w || ida.source_h != scene.image_h))
      throw ConfigError("config: ida source size must equal the scene image size");
    if (bda_enabled && (bda.rot_min_rad != 0.0 || bda.rot_max_rad != 0.0) &&
        (!grid.centered() || grid.nx() != grid.ny()))
      throw ConfigError("config: bda rotation needs a square grid centered at the origin");
    if (preset != "custom") {
      bool known = false;
      for (const Preset& p : presets()) known |= (p.name == preset);
      if (!known) throw ConfigError("config: unknown preset '" + preset + "'");
    }
  }
};

namespace detail {

struct RawConfig {
  // section -> key -> value, plus consumption tracking for unknown-key errors
  std::map<std::string, std::map<std::string, std::string>> values;
  mutable std::map<std::string, std::map<std::string, bool>> consumed;

  std::optional<std::string> get(const std::string& section, const std::string& key) const {
    const auto s = values.find(section);
    if (s == values.end()) return std::nullopt;
    const auto k = s->second.find(key);
    if (k == s->second.end()) return std::nullopt;
    consumed[section][key] = true;
    return k->second;
  }

  void fail_on_unconsumed() const {
    for (const auto& [section, kv] : values)
      for (const auto& [key, value] : kv)
        if (!consumed.count(section) || !consumed.at(section).count(key))
          throw ConfigError("config: unknown key '" + (section.empty() ? key : section + "." + key) + "'");
  }
};

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline RawConfig parse_raw(std::istream& in) {
  RawConfig raw;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config line " + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");
    if (raw.values[section].count(key))
      throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    raw.values[section][key] = value;
  }
  return raw;
}

inline double to_double(const std::string& s, const std::string& where) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (...) {
    throw ConfigError("config: '" + where + "' is not a number");
  }
  if (pos != s.size()) throw ConfigError("config: '" + where + "' is not a number");
  return v;
}

inline std::int64_t to_int(const std::string& s, const std::string& where) {
  std::size_t pos = 0;
  std::int64_t v = 0;
  try {
    v = std::stoll(s, &pos);
  } catch (...) {
    throw ConfigError("config: '" + where + "' is not an integer");
  }
  if (pos != s.size()) throw ConfigError("config: '" + where + "' is not an integer");
  return v;
}

inline bool to_bool(const std::string& s, const std::string& where) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw ConfigError("config: '" + where + "' must be true or false");
}

inline std::vector<double> to_list(const std::string& s, const std::string& where) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(trim(item), where));
  if (out.empty()) throw ConfigError("config: '" + where + "' must be a comma-separated list");
  return out;
}

struct Loader {
  const RawConfig& raw;

  double num(const std::string& sec, const std::string& key, double fallback) const {
    const auto v = raw.get(sec, key);
    return v ? to_double(*v, sec + "." + key) : fallback;
  }
  std::int64_t integer(const std::string& sec, const std::string& key, std::int64_t fallback) const {
    const auto v = raw.get(sec, key);
    return v ? to_int(*v, sec + "." + key) : fallback;
  }
  bool boolean(const std::string& sec, const std::string& key, bool fallback) const {
    const auto v = raw.get(sec, key);
    return v ? to_bool(*v, sec + "." + key) : fallback;
  }
  std::string text(const std::string& sec, const std::string& key, const std::string& fallback) const {
    const auto v = raw.get(sec, key);
    return v ? *v : fallback;
  }
  std::vector<double> list(const std::string& sec, const std::string& key,
                           std::vector<double> fallback) const {
    const auto v = raw.get(sec, key);
    return v ? to_list(*v, sec + "." + key) : std::move(fallback);
  }
};

inline encoder::EncoderKind encoder_kind(const std::string& s, const std::string& where) {
  if (s == "toy_conv") return encoder::EncoderKind::kToyConv;
  if (s == "depth_oracle") return encoder::EncoderKind::kDepthOracle;
  if (s == "identity") return encoder::EncoderKind::kIdentity;
  throw ConfigError("config: '" + where + "' must be toy_conv, depth_oracle, or identity");
}

}  // namespace detail

inline PipelineConfig parse_config(std::istream& in) {
  const detail::RawConfig raw = detail::parse_raw(in);
  const detail::Loader L{raw};
  PipelineConfig c;

  c.preset = L.text("", "preset", c.preset);
  c.seed = static_cast<std::uint64_t>(L.integer("", "seed", 0));

  c.grid.x_min = L.num("grid", "x_min_m", c.grid.x_min);
  c.grid.x_max = L.num("grid", "x_max_m", c.grid.x_max);
  c.grid.y_min = L.num("grid", "y_min_m", c.grid.y_min);
  c.grid.y_max = L.num("grid", "y_max_m", c.grid.y_max);
  c.grid.cell = L.num("grid", "cell_m", c.grid.cell);
  c.grid.z_min = L.num("grid", "z_min_m", c.grid.z_min);
  c.grid.z_max = L.num("grid", "z_max_m", c.grid.z_max);

  const double bins_min = L.num("depth_bins", "min_m", c.bins.d_min);
  const double bins_max = L.num("depth_bins", "max_m", c.bins.d_max);
  const double bins_step = L.num("depth_bins", "step_m", c.bins.step);
  c.bins = view_transform::DepthBins(bins_min, bins_max, bins_step);

  // Preset channel widths apply when [image_encoder] does not say otherwise.
  int default_channels = c.image_encoder.channels;
  if (c.preset != "custom") {
    for (const Preset& p : presets())
      if (p.name == c.preset) default_channels = p.vt_channels;
  }
  c.image_encoder.kind =
      detail::encoder_kind(L.text("image_encoder", "kind", "toy_conv"), "image_encoder.kind");
  c.image_encoder.channels = static_cast<int>(L.integer("image_encoder", "channels", default_channels));
  c.image_encoder.stride = static_cast<int>(L.integer("image_encoder", "stride", c.image_encoder.stride));
  c.image_encoder.seed = static_cast<std::uint64_t>(L.integer("image_encoder", "seed", 0));
  c.image_encoder.bias = L.boolean("image_encoder", "bias", true);

  c.bev_encoder.kind =
      detail::encoder_kind(L.text("bev_encoder", "kind", "identity"), "bev_encoder.kind");
  c.bev_encoder.channels = static_cast<int>(L.integer("bev_encoder", "channels", c.image_encoder.channels));
  c.bev_encoder.seed = static_cast<std::uint64_t>(L.integer("bev_encoder", "seed", 0));
  c.bev_encoder.bias = L.boolean("bev_encoder", "bias", true);

  c.ida_enabled = L.boolean("ida", "enabled", false);
  c.ida.flip_prob = L.num("ida", "flip_prob", c.ida.flip_prob);
  c.ida.scale_min = L.num("ida", "scale_min", c.ida.scale_min);
  c.ida.scale_max = L.num("ida", "scale_max", c.ida.scale_max);
  c.ida.rot_min_rad = deg_to_rad(L.num("ida", "rot_min_deg", rad_to_deg(c.ida.rot_min_rad)));
  c.ida.rot_max_rad = deg_to_rad(L.num("ida", "rot_max_deg", rad_to_deg(c.ida.rot_max_rad)));
  c.ida.crop_w = static_cast<int>(L.integer("ida", "crop_w_px", c.ida.crop_w));
  c.ida.crop_h = static_cast<int>(L.integer("ida", "crop_h_px", c.ida.crop_h));
  c.ida.source_w = static_cast<int>(L.integer("ida", "source_w_px", c.ida.source_w));
  c.ida.source_h = static_cast<int>(L.integer("ida", "source_h_px", c.ida.source_h));
  {
    const std::string hm = L.text("ida", "crop_horizontal_mode", "random");
    if (hm == "random") c.ida.crop_horizontal_mode = augment::CropHorizontalMode::kRandom;
    else if (hm == "center") c.ida.crop_horizontal_mode = augment::CropHorizontalMode::kCenter;
    else throw ConfigError("config: ida.crop_horizontal_mode must be random or center");
    const std::string vm = L.text("ida", "crop_vertical_mode", "fixed");
    if (vm == "fixed") c.ida.crop_vertical_mode = augment::CropVerticalMode::kFixed;
    else if (vm == "bottom") c.ida.crop_vertical_mode = augment::CropVerticalMode::kBottom;
    else if (vm == "random") c.ida.crop_vertical_mode = augment::CropVerticalMode::kRandom;
    else throw ConfigError("config: ida.crop_vertical_mode must be fixed, bottom, or random");
    const std::string it = L.text("ida", "interp", "nearest");
    if (it == "nearest") c.ida.interp = augment::Interp::kNearest;
    else if (it == "bilinear") c.ida.interp = augment::Interp::kBilinear;
    else throw ConfigError("config: ida.interp must be nearest or bilinear");
  }

  c.bda_enabled = L.boolean("bda", "enabled", false);
  c.bda.flip_prob = L.num("bda", "flip_prob", c.bda.flip_prob);
  c.bda.rot_min_rad = deg_to_rad(L.num("bda", "rot_min_deg", rad_to_deg(c.bda.rot_min_rad)));
  c.bda.rot_max_rad = deg_to_rad(L.num("bda", "rot_max_deg", rad_to_deg(c.bda.rot_max_rad)));
  c.bda.scale_min = L.num("bda", "scale_min", c.bda.scale_min);
  c.bda.scale_max = L.num("bda", "scale_max", c.bda.scale_max);
  {
    const std::string it = L.text("bda", "interp", "nearest");
    if (it == "nearest") c.bda.interp = augment::Interp::kNearest;
    else if (it == "bilinear") c.bda.interp = augment::Interp::kBilinear;
    else throw ConfigError("config: bda.interp must be nearest or bilinear");
  }

  c.head.score_thresh = L.num("head", "score_thresh", c.head.score_thresh);
  c.head.max_dets = static_cast<std::size_t>(L.integer("head", "max_dets", static_cast<std::int64_t>(c.head.max_dets)));
  c.head.nms_radius = L.num("head", "nms_radius_m", c.head.nms_radius);
  c.head.gaussian_min_radius = static_cast<int>(L.integer("head", "gaussian_min_radius_cells", c.head.gaussian_min_radius));
  c.head.gaussian_overlap = L.num("head", "gaussian_overlap", c.head.gaussian_overlap);
  c.head.num_classes = static_cast<int>(L.integer("head", "num_classes", c.head.num_classes));
  {
    const auto nd = L.list("head", "nominal_dims_m",
                           {c.head.nominal_dims.x(), c.head.nominal_dims.y(), c.head.nominal_dims.z()});
    if (nd.size() != 3) throw ConfigError("config: head.nominal_dims_m needs 3 entries");
    c.head.nominal_dims = Vec3(nd[0], nd[1], nd[2]);
  }
  c.head.nominal_z = L.num("head", "nominal_z_m", c.head.nominal_z);
  c.head.centroid_radius_cells = static_cast<int>(L.integer("head", "centroid_radius_cells", c.head.centroid_radius_cells));

  c.metric.dist_thresholds = L.list("metrics", "dist_thresholds_m", c.metric.dist_thresholds);
  c.metric.tp_threshold = L.num("metrics", "tp_threshold_m", c.metric.tp_threshold);
  c.metric.min_recall = L.num("metrics", "min_recall", c.metric.min_recall);
  c.metric.min_precision = L.num("metrics", "min_precision", c.metric.min_precision);
  c.metric.class_aware_aoe_periods = L.boolean("metrics", "class_aware_aoe_periods", false);
  {
    const auto hp = L.list("metrics", "half_period_classes", {});
    c.metric.half_period_classes.clear();
    for (double v : hp) c.metric.half_period_classes.insert(static_cast<int>(v));
  }

  c.scene.n_cameras = static_cast<int>(L.integer("scene", "n_cameras", c.scene.n_cameras));
  c.scene.image_w = static_cast<int>(L.integer("scene", "image_w_px", c.scene.image_w));
  c.scene.image_h = static_cast<int>(L.integer("scene", "image_h_px", c.scene.image_h));
  c.scene.fov_deg = L.num("scene", "fov_deg", c.scene.fov_deg);
  c.scene.n_boxes_min = static_cast<int>(L.integer("scene", "n_boxes_min", c.scene.n_boxes_min));
  c.scene.n_boxes_max = static_cast<int>(L.integer("scene", "n_boxes_max", c.scene.n_boxes_max));
  c.scene.spawn_radius = L.num("scene", "spawn_radius_m", c.scene.spawn_radius);
  c.scene.spawn_min_range = L.num("scene", "spawn_min_range_m", c.scene.spawn_min_range);
  c.scene.min_spacing = L.num("scene", "min_spacing_m", c.scene.min_spacing);
  c.scene.min_bearing_sep_deg = L.num("scene", "min_bearing_sep_deg", c.scene.min_bearing_sep_deg);
  {
    const auto lo = L.list("scene", "dims_min_m", {c.scene.dims_min.x(), c.scene.dims_min.y(), c.scene.dims_min.z()});
    const auto hi = L.list("scene", "dims_max_m", {c.scene.dims_max.x(), c.scene.dims_max.y(), c.scene.dims_max.z()});
    if (lo.size() != 3 || hi.size() != 3) throw ConfigError("config: scene dims ranges need 3 entries");
    c.scene.dims_min = Vec3(lo[0], lo[1], lo[2]);
    c.scene.dims_max = Vec3(hi[0], hi[1], hi[2]);
  }
  c.scene.z_center_min = L.num("scene", "z_center_min_m", c.scene.z_center_min);
  c.scene.z_center_max = L.num("scene", "z_center_max_m", c.scene.z_center_max);
  c.scene.speed_max = L.num("scene", "speed_max_mps", c.scene.speed_max);
  c.scene.n_classes = static_cast<int>(L.integer("scene", "n_classes", c.scene.n_classes));
  c.scene.n_attributes = static_cast<int>(L.integer("scene", "n_attributes", c.scene.n_attributes));

  raw.fail_on_unconsumed();

  if (c.scene.n_classes > c.head.num_classes)
    throw ConfigError("config: scene.n_classes exceeds head.num_classes");
  c.validate();
  return c;
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config: " + path);
  return parse_config(f);
}

/// Canonical text used for hashing: every effective field in fixed order.
inline std::string canonical_text(const PipelineConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << "preset=" << c.preset << ";seed=" << c.seed << ";grid=" << c.grid.x_min << ','
     << c.grid.x_max << ',' << c.grid.y_min << ',' << c.grid.y_max << ',' << c.grid.cell << ','
     << c.grid.z_min << ',' << c.grid.z_max << ";bins=" << c.bins.d_min << ',' << c.bins.d_max
     << ',' << c.bins.step << ";ie=" << static_cast<int>(c.image_encoder.kind) << ','
     << c.image_encoder.channels << ',' << c.image_encoder.stride << ',' << c.image_encoder.seed
     << ',' << c.image_encoder.bias << ";be=" << static_cast<int>(c.bev_encoder.kind) << ','
     << c.bev_encoder.channels << ',' << c.bev_encoder.seed << ',' << c.bev_encoder.bias
     << ";ida=" << c.ida_enabled << ',' << c.ida.flip_prob << ',' << c.ida.scale_min << ','
     << c.ida.scale_max << ',' << c.ida.rot_min_rad << ',' << c.ida.rot_max_rad << ','
     << c.ida.crop_w << ',' << c.ida.crop_h << ',' << c.ida.source_w << ',' << c.ida.source_h
     << ',' << static_cast<int>(c.ida.crop_horizontal_mode) << ','
     << static_cast<int>(c.ida.crop_vertical_mode) << ',' << static_cast<int>(c.ida.interp)
     << ";bda=" << c.bda_enabled << ','
     << c.bda.flip_prob << ',' << c.bda.rot_min_rad << ',' << c.bda.rot_max_rad << ','
     << c.bda.scale_min << ',' << c.bda.scale_max << ',' << static_cast<int>(c.bda.interp)
     << ";head=" << c.head.score_thresh << ','
     << c.head.max_dets << ',' << c.head.nms_radius << ',' << c.head.gaussian_min_radius << ','
     << c.head.gaussian_overlap << ',' << c.head.num_classes << ',' << c.head.nominal_dims.x()
     << ',' << c.head.nominal_dims.y() << ',' << c.head.nominal_dims.z() << ','
     << c.head.nominal_z << ',' << c.head.centroid_radius_cells << ";metrics=";
  for (double t : c.metric.dist_thresholds) os << t << ',';
  os << c.metric.tp_threshold << ',' << c.metric.min_recall << ',' << c.metric.min_precision
     << ',' << c.metric.class_aware_aoe_periods << ";scene=" << c.scene.n_cameras << ','
     << c.scene.image_w << ',' << c.scene.image_h << ',' << c.scene.fov_deg << ','
     << c.scene.n_boxes_min << ',' << c.scene.n_boxes_max << ',' << c.scene.spawn_radius << ','
     << c.scene.spawn_min_range << ',' << c.scene.min_spacing << ','
     << c.scene.min_bearing_sep_deg << ',' << c.scene.dims_min.x()
     << ',' << c.scene.dims_min.y() << ',' << c.scene.dims_min.z() << ',' << c.scene.dims_max.x()
     << ',' << c.scene.dims_max.y() << ',' << c.scene.dims_max.z() << ','
     << c.scene.z_center_min << ',' << c.scene.z_center_max << ',' << c.scene.speed_max << ','
     << c.scene.n_classes << ',' << c.scene.n_attributes;
  return os.str();
}

/// FNV-1a hash of the canonical text, as fixed-width hex.
inline std::string config_hash(const PipelineConfig& c) {
  const std::uint64_t h = SeedStream::fnv1a(canonical_text(c));
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

}  // namespace bevkit::config
