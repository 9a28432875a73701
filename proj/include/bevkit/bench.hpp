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

#include <chrono>
#include <cstdint>
#include <vector>

#include "bevkit/common.hpp"
#include "bevkit/rng.hpp"
#include "bevkit/view_transform.hpp"

// Wall-clock comparison of the two splat kernels on random clouds, with the
// naive kernel as the correctness oracle at every size.

namespace bevkit::bench {

struct KernelTiming {
  std::string kernel;
  std::size_t count = 0;
  std::uint64_t nanoseconds = 0;
  double max_rel_error = 0.0;  // vs the naive kernel; 0 for naive itself
};

struct CountReport {
  std::size_t count = 0;
  KernelTiming naive;
  KernelTiming sorted;
  double speedup_sorted_over_naive = 0.0;
};

struct BenchReport {
  std::vector<CountReport> per_count;
  bool naive_time_monotone = true;  // soft expectation, reported not enforced
};

inline view_transform::PointFeatureCloud random_cloud(std::uint64_t seed, std::size_t n,
                                                      std::size_t channels,
                                                      const view_transform::BevGrid& grid) {
  SeedStream s(seed, "bench_cloud");
  view_transform::PointFeatureCloud cloud;
  cloud.channels = channels;
  cloud.positions.reserve(n);
  cloud.weights.reserve(n);
  cloud.features.reserve(n * channels);
  for (std::size_t i = 0; i < n; ++i) {
    cloud.positions.emplace_back(s.uniform(grid.x_min * 1.1, grid.x_max * 1.1),
                                 s.uniform(grid.y_min * 1.1, grid.y_max * 1.1),
                                 s.uniform(grid.z_min - 1.0, grid.z_max + 1.0));
    cloud.weights.push_back(s.next_unit());
    for (std::size_t c = 0; c < channels; ++c) cloud.features.push_back(s.uniform(0.0, 2.0));
  }
  return cloud;
}

template <typename Fn>
inline std::uint64_t time_ns(Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  const auto t1 = std::chrono::steady_clock::now();
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
}

inline BenchReport run(const std::vector<std::size_t>& counts, const view_transform::BevGrid& grid,
                       std::uint64_t seed, std::size_t channels = 8) {
  BenchReport report;
  std::uint64_t prev_naive = 0;
  for (const std::size_t n : counts) {
    if (n < 1) throw std::invalid_argument("bench: point counts must be >= 1");
    const auto cloud = random_cloud(seed ^ n, n, channels, grid);

    view_transform::BevFeature out_naive, out_sorted;
    CountReport cr;
    cr.count = n;
    cr.naive = {"splat_naive", n, time_ns([&] { out_naive = view_transform::splat_naive(cloud, grid); }), 0.0};
    cr.sorted = {"splat_sorted", n, time_ns([&] { out_sorted = view_transform::splat_sorted(cloud, grid); }), 0.0};

    double worst = 0.0;
    for (std::size_t i = 0; i < out_naive.data.size(); ++i)
      worst = std::max(worst, rel_err(out_naive.data.data[i], out_sorted.data.data[i]));
    cr.sorted.max_rel_error = worst;
    cr.speedup_sorted_over_naive =
        cr.sorted.nanoseconds > 0
            ? static_cast<double>(cr.naive.nanoseconds) / static_cast<double>(cr.sorted.nanoseconds)
            : 0.0;
    if (prev_naive > 0 && cr.naive.nanoseconds < prev_naive) report.naive_time_monotone = false;
    prev_naive = cr.naive.nanoseconds;
    report.per_count.push_back(cr);
  }
  return report;
}

}  // namespace bevkit::bench
