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
#include "bevkit/encoder.hpp"
#include "bevkit/rng.hpp"

using namespace bevkit;
using namespace bevkit::encoder;
using bevkit::view_transform::DepthBins;

TEST_CASE("depth_oracle puts the one-hot at the true bin") {
  const DepthBins bins(1.0, 60.0, 1.0);
  Tensor3 img(16, 16, 3, 0.5);
  Tensor2 depth(16, 16, 0.0);
  depth(8, 8) = 12.3;  // the pixel sampled by the single feature cell

  EncoderSpec spec;
  spec.kind = EncoderKind::kDepthOracle;
  spec.channels = 2;
  spec.stride = 16;
  const auto [fm, logits] = encode_image(img, spec, bins, &depth);
  REQUIRE(logits.data.d0 == 59);
  std::size_t argmax = 0;
  for (std::size_t k = 1; k < 59; ++k)
    if (logits.data(k, 0, 0) > logits.data(argmax, 0, 0)) argmax = k;
  CHECK(argmax == 11);
  CHECK(logits.data(11, 0, 0) == 40.0);
  CHECK(logits.data(10, 0, 0) == -40.0);
  CHECK(fm.data(0, 0, 0) == 1.0);
  CHECK(fm.data(1, 0, 0) == 1.0);
}

TEST_CASE("depth_oracle: pixels without a return contribute nothing") {
  const DepthBins bins(1.0, 10.0, 1.0);
  Tensor3 img(16, 32, 3, 0.0);
  Tensor2 depth(16, 32, 0.0);  // no returns anywhere

  EncoderSpec spec;
  spec.kind = EncoderKind::kDepthOracle;
  spec.channels = 1;
  spec.stride = 16;
  const auto [fm, logits] = encode_image(img, spec, bins, &depth);
  CHECK(fm.data.sum() == 0.0);
  CHECK(logits.data.sum() == 0.0);  // uniform zero logits
}

TEST_CASE("depth_oracle requires the depth raster") {
  const DepthBins bins(1.0, 10.0, 1.0);
  Tensor3 img(16, 16, 3, 0.0);
  EncoderSpec spec;
  spec.kind = EncoderKind::kDepthOracle;
  CHECK_THROWS_AS(encode_image(img, spec, bins, nullptr), std::invalid_argument);
}

TEST_CASE("toy_conv is deterministic and honors the shape contract") {
  const DepthBins bins(1.0, 7.0, 1.0);
  SeedStream s(21, "img");
  Tensor3 img(64, 96, 3);
  for (double& v : img.data) v = s.next_unit();

  EncoderSpec spec;
  spec.kind = EncoderKind::kToyConv;
  spec.channels = 6;
  spec.stride = 16;
  spec.seed = 99;
  const auto [fm1, lg1] = encode_image(img, spec, bins);
  const auto [fm2, lg2] = encode_image(img, spec, bins);
  CHECK(fm1.data.data == fm2.data.data);
  CHECK(lg1.data.data == lg2.data.data);
  CHECK(fm1.data.d0 == 6);
  CHECK(fm1.data.d1 == 4);
  CHECK(fm1.data.d2 == 6);
  CHECK(lg1.data.d0 == bins.count());

  // a different seed must change the output
  spec.seed = 100;
  const auto [fm3, lg3] = encode_image(img, spec, bins);
  CHECK(fm3.data.data != fm1.data.data);
}

TEST_CASE("encode_image rejects sizes not divisible by the stride") {
  const DepthBins bins(1.0, 5.0, 1.0);
  Tensor3 img(60, 96, 3, 0.0);
  EncoderSpec spec;
  spec.kind = EncoderKind::kToyConv;
  spec.stride = 16;
  CHECK_THROWS_AS(encode_image(img, spec, bins), std::invalid_argument);
}

TEST_CASE("encode_bev: identity mode and deterministic toy mode") {
  SeedStream s(22, "bev");
  view_transform::BevFeature f;
  f.data = Tensor3(3, 8, 8);
  for (double& v : f.data.data) v = s.uniform(-1.0, 1.0);

  EncoderSpec id;
  id.kind = EncoderKind::kIdentity;
  CHECK(encode_bev(f, id).data.data == f.data.data);

  EncoderSpec toy;
  toy.kind = EncoderKind::kToyConv;
  toy.seed = 5;
  const auto e1 = encode_bev(f, toy);
  const auto e2 = encode_bev(f, toy);
  CHECK(e1.data.data == e2.data.data);
  CHECK(e1.data.d0 == 3);
  CHECK(e1.data.d1 == 8);
  CHECK(e1.data.d2 == 8);
}

TEST_CASE("biasless toy BEV encoder is linear") {
  SeedStream s(23, "lin");
  view_transform::BevFeature f;
  f.data = Tensor3(2, 6, 6);
  for (double& v : f.data.data) v = s.uniform(-1.0, 1.0);

  EncoderSpec toy;
  toy.kind = EncoderKind::kToyConv;
  toy.seed = 5;
  toy.bias = false;

  const double alpha = 2.75;
  view_transform::BevFeature scaled;
  scaled.data = f.data;
  for (double& v : scaled.data.data) v *= alpha;

  const auto lhs = encode_bev(scaled, toy);
  const auto rhs = encode_bev(f, toy);
  for (std::size_t i = 0; i < lhs.data.size(); ++i)
    CHECK(std::abs(lhs.data.data[i] - alpha * rhs.data.data[i]) < 1e-6);
}

TEST_CASE("invalid encoder specs are rejected") {
  EncoderSpec spec;
  spec.stride = 12;
  CHECK_THROWS_AS(spec.validate_for_image(), ConfigError);
  spec.stride = 16;
  spec.kind = EncoderKind::kIdentity;
  CHECK_THROWS_AS(spec.validate_for_image(), ConfigError);
  spec.kind = EncoderKind::kDepthOracle;
  CHECK_THROWS_AS(spec.validate_for_bev(), ConfigError);
}

TEST_CASE("encoder invariant checks pass") {
  checks::CheckOptions opt;
  opt.seed = 17;
  opt.trials = 40;
  CHECK(checks::check_encoder_determinism(opt).pass);
  CHECK(checks::check_encoder_shapes(opt).pass);
  CHECK(checks::check_depth_oracle_footprint_mass(opt).pass);
}
