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

#include <sstream>

#include <catch2/catch.hpp>

#include "bevkit/config.hpp"

using namespace bevkit;
using namespace bevkit::config;

namespace {

PipelineConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

}  // namespace

TEST_CASE("empty config yields validated defaults") {
  const auto cfg = parse("");
  CHECK(cfg.grid.nx() == 128);
  CHECK(cfg.bins.count() == 59);
  CHECK(cfg.preset == "custom");
  CHECK_FALSE(cfg.ida_enabled);
}

TEST_CASE("sections, comments, and units parse") {
  const auto cfg = parse(R"(
# pipeline configuration
preset = sttiny
seed = 99

[grid]
cell_m = 0.4
z_max_m = 4.0

[depth_bins]
max_m = 45.0
step_m = 0.5

[ida]
enabled = true
rot_max_deg = 10.0
crop_w_px = 704
crop_h_px = 256
source_w_px = 704   # matches the scene below
source_h_px = 256

[scene]
image_w_px = 704
image_h_px = 256

[metrics]
dist_thresholds_m = 0.5, 1.0, 2.0
)");
  CHECK(cfg.seed == 99);
  CHECK(cfg.grid.cell == 0.4);
  CHECK(cfg.grid.nx() == 256);
  CHECK(cfg.bins.count() == 88);
  CHECK(cfg.ida.rot_max_rad == Approx(deg_to_rad(10.0)));
  CHECK(cfg.metric.dist_thresholds.size() == 3);
  CHECK(cfg.image_encoder.channels == 64);  // sttiny preset width
}

TEST_CASE("presets set channel widths unless overridden") {
  CHECK(parse("preset = r50\n").image_encoder.channels == 80);
  CHECK(parse("preset = r101\n").image_encoder.channels == 64);
  const auto overridden = parse("preset = r50\n[image_encoder]\nchannels = 12\n");
  CHECK(overridden.image_encoder.channels == 12);
  CHECK_THROWS_AS(parse("preset = resnet18\n"), ConfigError);
}

TEST_CASE("unknown keys and malformed lines are hard errors") {
  CHECK_THROWS_AS(parse("[grid]\ncell = 0.8\n"), ConfigError);        // key missing unit suffix
  CHECK_THROWS_AS(parse("[gridd]\ncell_m = 0.8\n"), ConfigError);     // unknown section
  CHECK_THROWS_AS(parse("stray line\n"), ConfigError);                // no '='
  CHECK_THROWS_AS(parse("[grid]\ncell_m = fast\n"), ConfigError);     // not a number
  CHECK_THROWS_AS(parse("seed = 1\nseed = 2\n"), ConfigError);        // duplicate
  CHECK_THROWS_AS(parse("[ida]\nenabled = yes\n"), ConfigError);      // not a bool
}

TEST_CASE("cross-field validation") {
  // crop larger than source
  CHECK_THROWS_AS(parse("[ida]\nenabled = true\ncrop_w_px = 2000\n"), ConfigError);
  // ida source must equal the scene image size when enabled
  CHECK_THROWS_AS(parse("[ida]\nenabled = true\n[scene]\nimage_w_px = 704\nimage_h_px = 256\n"),
                  ConfigError);
  // bda rotation needs a centered grid
  CHECK_THROWS_AS(parse("[bda]\nenabled = true\n[grid]\nx_min_m = 0.0\nx_max_m = 102.4\n"),
                  ConfigError);
  // scene classes must fit the head
  CHECK_THROWS_AS(parse("[scene]\nn_classes = 3\n[head]\nnum_classes = 2\n"), ConfigError);
  // encoder stride must divide the scene image
  CHECK_THROWS_AS(parse("[scene]\nimage_w_px = 100\nimage_h_px = 64\n"), ConfigError);
}

TEST_CASE("config hash tracks effective fields") {
  const auto a = parse("seed = 1\n");
  const auto b = parse("seed = 1\n");
  const auto c = parse("seed = 2\n");
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a) != config_hash(c));
  CHECK(config_hash(a).size() == 16);
}
