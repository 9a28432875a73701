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

// Evaluate a hand-built prediction set against a tiny ground truth and print
// the metric breakdown: matching, AP, TP errors, and the composite score.

#include <cstdio>

#include "bevkit/metrics.hpp"

int main() {
  using namespace bevkit;

  DetectionSet gts;
  for (int i = 0; i < 4; ++i) {
    Box3D b;
    b.center = Vec3(10.0 * i, 5.0, 0.0);
    b.dims = Vec3(2.0, 4.5, 1.8);
    b.yaw = 0.3 * i;
    b.velocity = Vec2(3.0, 0.0);
    gts.push_back(b);
  }

  DetectionSet preds = gts;        // three good detections, one drifted, one spurious
  preds[1].center.x() += 0.8;
  preds[1].score = 0.9;
  preds[3].center.y() += 5.0;      // pushed outside the 2 m TP threshold
  preds[3].score = 0.85;
  Box3D fp;
  fp.center = Vec3(-20, -20, 0);
  fp.score = 0.5;
  preds.push_back(fp);

  const auto result = metrics::evaluate(preds, gts);
  std::printf("mAP  %.4f\n", result.mean_ap);
  std::printf("mATE %.4f m\nmASE %.4f\nmAOE %.4f rad\nmAVE %.4f m/s\nmAAE %.4f\n",
              result.mean_errors.ate, result.mean_errors.ase, result.mean_errors.aoe,
              result.mean_errors.ave, result.mean_errors.aae);
  std::printf("NDS  %.4f\n", result.nds_score);
  return 0;
}
