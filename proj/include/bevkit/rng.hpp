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
#include <limits>
#include <string_view>

namespace bevkit {

// All randomness in the library flows from one root seed through named
// sub-streams ("scenegen", "ida", "bda", ...), each forkable by index, so any
// stage is replayable in isolation. Hand-rolled splitmix64 keeps draws
// identical across compilers and platforms; std::uniform_real_distribution
// would not.
class SeedStream {
 public:
  explicit SeedStream(std::uint64_t root) : state_(mix(root ^ 0x9e3779b97f4a7c15ull)) {}

  SeedStream(std::uint64_t root, std::string_view name) : SeedStream(root) {
    state_ = mix(state_ ^ fnv1a(name));
  }

  /// Independent child stream, e.g. one per sample or per camera.
  SeedStream fork(std::uint64_t index) const {
    SeedStream child(0);
    child.state_ = mix(state_ ^ mix(index + 0x632be59bd9b4e019ull));
    return child;
  }

  SeedStream fork(std::string_view name) const {
    SeedStream child(0);
    child.state_ = mix(state_ ^ fnv1a(name));
    return child;
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix(state_);
  }

  /// Uniform double in [0, 1).
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi); returns lo when the range is collapsed.
  double uniform(double lo, double hi) {
    if (hi <= lo) return lo;
    return lo + (hi - lo) * next_unit();
  }

  /// Uniform integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi <= lo) return lo;
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(next_u64() % span);
  }

  bool bernoulli(double p) { return next_unit() < p; }

  static std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char c : s) {
      h ^= static_cast<std::uint8_t>(c);
      h *= 0x100000001b3ull;
    }
    return h;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t state_;
};

}  // namespace bevkit
