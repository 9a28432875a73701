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
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "bevkit/common.hpp"
#include "bevkit/rng.hpp"
#include "bevkit/tensor.hpp"
#include "bevkit/view_transform.hpp"

// Feature providers standing in for trained backbones. Nothing is learned:
// toy_conv weights are expanded deterministically from a seed, and
// depth_oracle reads ground-truth depth so the whole pipeline can be
// verified end to end without a network.

namespace bevkit::encoder {

using view_transform::BevFeature;
using view_transform::DepthBins;
using view_transform::DepthLogits;
using view_transform::FeatureMap;

enum class EncoderKind { kToyConv, kDepthOracle, kIdentity };

struct EncoderSpec {
  EncoderKind kind = EncoderKind::kToyConv;
  int channels = 8;
  int stride = 16;   // image encoders only; one of 8, 16, 32
  std::uint64_t seed = 0;
  bool bias = true;  // toy_conv only; turn off for a purely linear stack

  void validate_for_image() const {
    if (channels < 1) throw ConfigError("encoder: channels must be >= 1");
    if (stride != 8 && stride != 16 && stride != 32)
      throw ConfigError("encoder: stride must be one of 8, 16, 32");
    if (kind == EncoderKind::kIdentity)
      throw ConfigError("encoder: identity is not a valid image encoder");
  }

  void validate_for_bev() const {
    if (channels < 1) throw ConfigError("encoder: channels must be >= 1");
    if (kind == EncoderKind::kDepthOracle)
      throw ConfigError("encoder: depth_oracle is not a valid BEV encoder");
  }
};

namespace detail {

/// 3x3 conv, zero padding, arbitrary stride; plain C arrays of seed-derived
/// weights. Layout: in (Cin,H,W) -> out (Cout,H/stride,W/stride).
inline Tensor3 conv3x3(const Tensor3& in, std::size_t out_channels, int stride,
                       const std::vector<double>& weights, const std::vector<double>& biases,
                       bool relu) {
  const std::size_t cin = in.d0, h = in.d1, w = in.d2;
  const std::size_t oh = h / static_cast<std::size_t>(stride);
  const std::size_t ow = w / static_cast<std::size_t>(stride);
  Tensor3 out(out_channels, oh, ow);
  for (std::size_t oc = 0; oc < out_channels; ++oc) {
    const double* wslice = weights.data() + oc * cin * 9;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        double acc = biases.empty() ? 0.0 : biases[oc];
        const std::int64_t cy = static_cast<std::int64_t>(oy) * stride;
        const std::int64_t cx = static_cast<std::int64_t>(ox) * stride;
        for (std::size_t ic = 0; ic < cin; ++ic) {
          for (int ky = -1; ky <= 1; ++ky) {
            const std::int64_t sy = cy + ky;
            if (sy < 0 || sy >= static_cast<std::int64_t>(h)) continue;
            for (int kx = -1; kx <= 1; ++kx) {
              const std::int64_t sx = cx + kx;
              if (sx < 0 || sx >= static_cast<std::int64_t>(w)) continue;
              acc += wslice[ic * 9 + (ky + 1) * 3 + (kx + 1)] *
                     in(ic, static_cast<std::size_t>(sy), static_cast<std::size_t>(sx));
            }
          }
        }
        out(oc, oy, ox) = relu ? std::max(0.0, acc) : acc;
      }
    }
  }
  return out;
}

inline std::vector<double> seeded_weights(SeedStream stream, std::size_t n, double magnitude) {
  std::vector<double> w(n);
  for (double& v : w) v = stream.uniform(-magnitude, magnitude);
  return w;
}

/// Split the image-encoder stride into two conv strides (both layers pull
/// their share; all allowed strides are divisible by 4).
inline std::pair<int, int> split_stride(int stride) {
  switch (stride) {
    case 8: return {2, 4};
    case 16: return {4, 4};
    case 32: return {8, 4};
    default: throw ConfigError("encoder: stride must be one of 8, 16, 32");
  }
}

}  // namespace detail

/// Encode one camera image into features and depth logits.
///
/// toy_conv: two seeded strided 3x3 convolutions (ReLU between), emitting
/// channels + depth-bin logit planes; bitwise deterministic per seed.
///
/// depth_oracle: requires the paired ground-truth depth raster. Every pixel
/// with a depth return gets one-hot logits (+40 at the true bin, -40
/// elsewhere) and all-ones features; pixels with no return get uniform
/// logits and zero features so they contribute no BEV mass.
inline std::pair<FeatureMap, DepthLogits> encode_image(const Tensor3& img_hwc,
                                                       const EncoderSpec& spec,
                                                       const DepthBins& bins,
                                                       const Tensor2* true_depth = nullptr) {
  spec.validate_for_image();
  const std::size_t h = img_hwc.d0, w = img_hwc.d1;
  if (h % spec.stride != 0 || w % spec.stride != 0)
    throw std::invalid_argument("encode_image: image dimensions must be divisible by the stride");
  const std::size_t oh = h / spec.stride, ow = w / spec.stride;
  const std::size_t d = bins.count();
  const auto c = static_cast<std::size_t>(spec.channels);

  FeatureMap fm;
  fm.stride = spec.stride;
  DepthLogits logits;

  if (spec.kind == EncoderKind::kDepthOracle) {
    if (true_depth == nullptr)
      throw std::invalid_argument("encode_image: depth_oracle requires a ground-truth depth raster");
    if (true_depth->d0 != h || true_depth->d1 != w)
      throw std::invalid_argument("encode_image: depth raster shape mismatch");
    fm.data = Tensor3(c, oh, ow, 0.0);
    logits.data = Tensor3(d, oh, ow, 0.0);
    for (std::size_t i = 0; i < oh; ++i) {
      const std::size_t sy = i * spec.stride + spec.stride / 2;
      for (std::size_t j = 0; j < ow; ++j) {
        const std::size_t sx = j * spec.stride + spec.stride / 2;
        const double depth = (*true_depth)(sy, sx);
        const std::int64_t bin = depth > 0.0 ? bins.bin_of(depth) : -1;
        if (bin < 0) continue;  // no return: uniform logits, zero features
        for (std::size_t k = 0; k < d; ++k)
          logits.data(k, i, j) = (static_cast<std::int64_t>(k) == bin) ? 40.0 : -40.0;
        for (std::size_t ch = 0; ch < c; ++ch) fm.data(ch, i, j) = 1.0;
      }
    }
    return {std::move(fm), std::move(logits)};
  }

  // toy_conv
  if (!img_hwc.all_finite()) throw std::invalid_argument("encode_image: non-finite image");
  const auto [s1, s2] = detail::split_stride(spec.stride);
  const std::size_t cin = img_hwc.d2, mid = 16;

  // channel-major copy of the H x W x C raster
  Tensor3 chw(cin, h, w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t ch = 0; ch < cin; ++ch) chw(ch, y, x) = img_hwc(y, x, ch);

  SeedStream root(spec.seed, "toy_conv");
  const auto w1 = detail::seeded_weights(root.fork("w1"), mid * cin * 9, 0.5);
  const auto b1 = spec.bias ? detail::seeded_weights(root.fork("b1"), mid, 0.1)
                            : std::vector<double>{};
  const std::size_t cout = c + d;
  const auto w2 = detail::seeded_weights(root.fork("w2"), cout * mid * 9, 0.25);
  const auto b2 = spec.bias ? detail::seeded_weights(root.fork("b2"), cout, 0.1)
                            : std::vector<double>{};

  const Tensor3 hidden = detail::conv3x3(chw, mid, s1, w1, b1, true);
  const Tensor3 head = detail::conv3x3(hidden, cout, s2, w2, b2, false);

  fm.data = Tensor3(c, oh, ow);
  logits.data = Tensor3(d, oh, ow);
  for (std::size_t i = 0; i < oh; ++i)
    for (std::size_t j = 0; j < ow; ++j) {
      for (std::size_t ch = 0; ch < c; ++ch) fm.data(ch, i, j) = head(ch, i, j);
      for (std::size_t k = 0; k < d; ++k) logits.data(k, i, j) = head(c + k, i, j);
    }
  return {std::move(fm), std::move(logits)};
}

/// Further encode the BEV raster: identity, or one seeded 3x3 stride-1
/// convolution preserving shape (linear when bias is off).
inline BevFeature encode_bev(const BevFeature& f, const EncoderSpec& spec) {
  spec.validate_for_bev();
  if (spec.kind == EncoderKind::kIdentity) return f;

  const std::size_t c = f.data.d0;
  SeedStream root(spec.seed, "toy_bev");
  const auto w = detail::seeded_weights(root.fork("w"), c * c * 9, 1.0 / (3.0 * std::sqrt(static_cast<double>(c))));
  const auto b = spec.bias ? detail::seeded_weights(root.fork("b"), c, 0.1) : std::vector<double>{};
  BevFeature out;
  out.data = detail::conv3x3(f.data, c, 1, w, b, false);
  return out;
}

}  // namespace bevkit::encoder
