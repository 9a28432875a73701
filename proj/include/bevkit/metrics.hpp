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
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "bevkit/box.hpp"
#include "bevkit/common.hpp"

// Center-distance detection metrics: greedy matching on ground-plane center
// distance, clipped/normalized average precision, the five true-positive
// error terms, and their composite score
//   NDS = (1/10) * [5*mAP + sum over the 5 errors of (1 - min(1, err))].
// Matching never crosses sample boundaries; ranking and averaging pool over
// the whole evaluation set.

namespace bevkit::metrics {

struct MetricConfig {
  std::vector<double> dist_thresholds{0.5, 1.0, 2.0, 4.0};  // meters
  double tp_threshold = 2.0;                                // meters
  double min_recall = 0.1;
  double min_precision = 0.1;
  bool class_aware_aoe_periods = false;  // opt-in: some classes wrap yaw at pi
  std::set<int> half_period_classes{};   // classes with orientation period pi

  void validate() const {
    if (dist_thresholds.empty()) throw ConfigError("metrics: need at least one threshold");
    double prev = 0.0;
    for (double t : dist_thresholds) {
      if (!(t > prev)) throw ConfigError("metrics: thresholds must be ascending and positive");
      prev = t;
    }
    if (!(tp_threshold > 0.0)) throw ConfigError("metrics: tp_threshold must be positive");
    if (!(min_recall >= 0.0 && min_recall < 1.0) || !(min_precision >= 0.0 && min_precision < 1.0))
      throw ConfigError("metrics: recall/precision floors must lie in [0, 1)");
  }
};

struct MatchResult {
  std::vector<std::pair<std::size_t, std::size_t>> matches;  // (pred index, gt index)
  std::vector<std::size_t> unmatched_preds;                  // false positives, rank order
  std::vector<std::size_t> unmatched_gts;                    // misses
  std::vector<std::size_t> pred_order;                       // rank order over all preds
};

inline double center_distance_2d(const Box3D& a, const Box3D& b) {
  const double dx = a.center.x() - b.center.x();
  const double dy = a.center.y() - b.center.y();
  return std::sqrt(dx * dx + dy * dy);
}

namespace detail {

using LexKey = std::array<double, 10>;

inline LexKey lex_key(const Box3D& b) {
  return {b.center.x(), b.center.y(),   b.center.z(),   b.dims.x(), b.dims.y(),
          b.dims.z(),   b.yaw,          b.velocity.x(), b.velocity.y(),
          static_cast<double>(b.attribute_id)};
}

/// Rank order: score descending, then a full lexicographic key over the box
/// state so equal-score predictions are ordered the same way regardless of
/// input permutation.
inline std::vector<std::size_t> rank_predictions(const DetectionSet& preds) {
  std::vector<std::size_t> order(preds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t ia, std::size_t ib) {
    const Box3D& a = preds[ia];
    const Box3D& b = preds[ib];
    if (a.score != b.score) return a.score > b.score;
    return lex_key(a) < lex_key(b);
  });
  return order;
}

/// Clipped, normalized AP over the standard 101-point recall grid, from a
/// ranked TP/FP sequence. Precision at grid recall r is the step (max)
/// envelope over curve samples with recall >= r; points at or below the
/// recall floor drop out, precisions clip at the precision floor, and the
/// mean renormalizes by (1 - floor).
inline double ap_from_ranked(const std::vector<bool>& tp_ranked, std::size_t n_gts,
                             double min_recall, double min_precision) {
  if (n_gts == 0) throw std::invalid_argument("ap_from_ranked: undefined without ground truths");
  if (tp_ranked.empty()) return 0.0;

  std::vector<double> recall(tp_ranked.size()), precision(tp_ranked.size());
  double tp = 0.0, fp = 0.0;
  for (std::size_t i = 0; i < tp_ranked.size(); ++i) {
    if (tp_ranked[i]) ++tp; else ++fp;
    recall[i] = tp / static_cast<double>(n_gts);
    precision[i] = tp / (tp + fp);
  }

  std::vector<double> env(precision.size());
  double run = 0.0;
  for (std::size_t i = precision.size(); i-- > 0;) {
    run = std::max(run, precision[i]);
    env[i] = run;
  }

  double total = 0.0;
  int used = 0;
  for (int g = 0; g <= 100; ++g) {
    const double r = static_cast<double>(g) / 100.0;
    if (r <= min_recall) continue;
    ++used;
    const auto it = std::lower_bound(recall.begin(), recall.end(), r - 1e-12);
    if (it == recall.end()) continue;  // unreachable recall contributes 0
    total += std::max(0.0, env[static_cast<std::size_t>(it - recall.begin())] - min_precision);
  }
  if (used == 0) return 0.0;
  // summation order can overshoot the exact bound by an ulp
  return std::clamp(total / (static_cast<double>(used) * (1.0 - min_precision)), 0.0, 1.0);
}

}  // namespace detail

/// Greedy matcher over one class pool: predictions in descending score, each
/// taking the nearest unmatched ground truth strictly within the threshold;
/// distance ties break toward the lower ground-truth index.
inline MatchResult match_detections(const DetectionSet& preds, const DetectionSet& gts,
                                    double threshold) {
  if (!(threshold > 0.0)) throw std::invalid_argument("match_detections: threshold must be positive");
  MatchResult out;
  out.pred_order = detail::rank_predictions(preds);
  std::vector<bool> gt_taken(gts.size(), false);

  for (const std::size_t pi : out.pred_order) {
    double best_dist = threshold;
    std::optional<std::size_t> best_gt;
    for (std::size_t gi = 0; gi < gts.size(); ++gi) {
      if (gt_taken[gi]) continue;
      const double d = center_distance_2d(preds[pi], gts[gi]);
      if (d < best_dist) {
        best_dist = d;
        best_gt = gi;
      }
    }
    if (best_gt) {
      gt_taken[*best_gt] = true;
      out.matches.emplace_back(pi, *best_gt);
    } else {
      out.unmatched_preds.push_back(pi);
    }
  }
  for (std::size_t gi = 0; gi < gts.size(); ++gi)
    if (!gt_taken[gi]) out.unmatched_gts.push_back(gi);
  return out;
}

/// Single-pool average precision (one sample, one class).
inline double average_precision(const DetectionSet& preds, const DetectionSet& gts,
                                double dist_threshold, double min_recall = 0.1,
                                double min_precision = 0.1) {
  if (gts.empty())
    throw std::invalid_argument("average_precision: undefined without ground truths");
  if (preds.empty()) return 0.0;
  const MatchResult m = match_detections(preds, gts, dist_threshold);
  std::vector<bool> is_tp(preds.size(), false);
  for (const auto& [pi, gi] : m.matches) is_tp[pi] = true;
  std::vector<bool> ranked;
  ranked.reserve(preds.size());
  for (const std::size_t pi : m.pred_order) ranked.push_back(is_tp[pi]);
  return detail::ap_from_ranked(ranked, gts.size(), min_recall, min_precision);
}

struct TpErrors {
  double ate = 1.0;  // meters
  double ase = 1.0;
  double aoe = 1.0;  // radians
  double ave = 1.0;  // m/s
  double aae = 1.0;
  bool empty_match_set = true;

  std::array<double, 5> as_array() const { return {ate, ase, aoe, ave, aae}; }
};

namespace detail {

struct TpAccumulator {
  double ate = 0, ase = 0, aoe = 0, ave = 0, hits = 0;
  std::size_t n = 0;

  void add(const Box3D& p, const Box3D& g, const MetricConfig& cfg) {
    ate += center_distance_2d(p, g);
    double iou = 1.0;
    for (int k = 0; k < 3; ++k)
      iou *= std::min(p.dims[k], g.dims[k]) / std::max(p.dims[k], g.dims[k]);
    ase += 1.0 - iou;
    double dyaw = std::abs(wrap_angle(p.yaw - g.yaw));
    if (cfg.class_aware_aoe_periods && cfg.half_period_classes.count(g.class_id) > 0)
      dyaw = std::min(dyaw, kPi - dyaw);
    aoe += dyaw;
    ave += (p.velocity - g.velocity).norm();
    hits += (p.attribute_id == g.attribute_id) ? 1.0 : 0.0;
    ++n;
  }

  TpErrors finish() const {
    TpErrors e;
    if (n == 0) return e;
    const auto dn = static_cast<double>(n);
    e.empty_match_set = false;
    e.ate = ate / dn;
    e.ase = ase / dn;
    e.aoe = aoe / dn;
    e.ave = ave / dn;
    e.aae = 1.0 - hits / dn;
    return e;
  }
};

}  // namespace detail

/// Mean true-positive errors over matched pairs: center distance, 1 - aligned
/// IoU (the per-dimension min/max ratio product), smallest absolute yaw
/// difference in [0, pi] (optionally [0, pi/2] for half-period classes),
/// velocity L2, and 1 - attribute accuracy. Empty set -> all ones, flagged.
inline TpErrors tp_errors(const DetectionSet& preds, const DetectionSet& gts,
                          const std::vector<std::pair<std::size_t, std::size_t>>& matches,
                          const MetricConfig& cfg = {}) {
  detail::TpAccumulator acc;
  for (const auto& [pi, gi] : matches) acc.add(preds[pi], gts[gi], cfg);
  return acc.finish();
}

/// The composite detection score.
inline double nds(double mean_ap, const std::array<double, 5>& mean_errors) {
  if (!(mean_ap >= 0.0 && mean_ap <= 1.0)) throw std::invalid_argument("nds: mAP out of range");
  double acc = 5.0 * mean_ap;
  for (double err : mean_errors) {
    if (!(err >= 0.0)) throw std::invalid_argument("nds: negative error");
    acc += 1.0 - std::min(1.0, err);
  }
  return acc / 10.0;
}

struct ClassResult {
  std::map<double, double> ap_by_threshold;
  TpErrors errors;
  std::size_t num_gts = 0;
};

struct EvalResult {
  std::map<int, ClassResult> per_class;
  double mean_ap = 0.0;
  std::map<double, double> mean_ap_by_threshold;
  TpErrors mean_errors;
  double nds_score = 0.0;
  bool any_empty_tp_set = false;
};

/// One evaluation unit: detections are only ever matched against ground
/// truth from the same sample.
struct SamplePair {
  DetectionSet preds;
  DetectionSet gts;
};

/// Full evaluation over a set of samples: per class and distance threshold
/// AP (ranked jointly across samples, matched within each), per-class TP
/// errors at the TP threshold, class-averaged means, NDS. Classes without
/// ground truths anywhere are absent from the result and every mean.
inline EvalResult evaluate_grouped(const std::vector<SamplePair>& samples,
                                   const MetricConfig& cfg = {}) {
  cfg.validate();
  std::set<int> classes;
  for (const SamplePair& sp : samples)
    for (const Box3D& g : sp.gts) classes.insert(g.class_id);

  EvalResult out;
  for (const int cls : classes) {
    // per-sample class pools
    std::vector<DetectionSet> cp(samples.size()), cg(samples.size());
    std::size_t n_gts = 0;
    for (std::size_t si = 0; si < samples.size(); ++si) {
      for (const Box3D& p : samples[si].preds)
        if (p.class_id == cls) cp[si].push_back(p);
      for (const Box3D& g : samples[si].gts)
        if (g.class_id == cls) cg[si].push_back(g);
      n_gts += cg[si].size();
    }

    ClassResult cr;
    cr.num_gts = n_gts;

    struct Ranked {
      double score;
      detail::LexKey key;
      std::size_t sample;
      bool tp;
    };
    for (const double threshold : cfg.dist_thresholds) {
      std::vector<Ranked> pool;
      for (std::size_t si = 0; si < samples.size(); ++si) {
        if (cp[si].empty()) continue;
        const MatchResult m = match_detections(cp[si], cg[si], threshold);
        std::vector<bool> is_tp(cp[si].size(), false);
        for (const auto& [pi, gi] : m.matches) is_tp[pi] = true;
        for (std::size_t pi = 0; pi < cp[si].size(); ++pi)
          pool.push_back({cp[si][pi].score, detail::lex_key(cp[si][pi]), si, is_tp[pi]});
      }
      std::sort(pool.begin(), pool.end(), [](const Ranked& a, const Ranked& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.key != b.key) return a.key < b.key;
        return a.sample < b.sample;
      });
      std::vector<bool> ranked;
      ranked.reserve(pool.size());
      for (const Ranked& r : pool) ranked.push_back(r.tp);
      cr.ap_by_threshold[threshold] =
          n_gts == 0 ? 0.0
                     : detail::ap_from_ranked(ranked, n_gts, cfg.min_recall, cfg.min_precision);
    }

    detail::TpAccumulator acc;
    for (std::size_t si = 0; si < samples.size(); ++si) {
      if (cp[si].empty()) continue;
      const MatchResult m = match_detections(cp[si], cg[si], cfg.tp_threshold);
      for (const auto& [pi, gi] : m.matches) acc.add(cp[si][pi], cg[si][gi], cfg);
    }
    cr.errors = acc.finish();
    out.any_empty_tp_set |= cr.errors.empty_match_set;
    out.per_class[cls] = std::move(cr);
  }

  if (out.per_class.empty()) return out;

  const auto n_cls = static_cast<double>(out.per_class.size());
  for (const double t : cfg.dist_thresholds) {
    double s = 0.0;
    for (const auto& [cls, cr] : out.per_class) s += cr.ap_by_threshold.at(t);
    out.mean_ap_by_threshold[t] = s / n_cls;
    out.mean_ap += s / n_cls;
  }
  out.mean_ap /= static_cast<double>(cfg.dist_thresholds.size());

  double ate = 0.0, ase = 0.0, aoe = 0.0, ave = 0.0, aae = 0.0;
  for (const auto& [cls, cr] : out.per_class) {
    ate += cr.errors.ate;
    ase += cr.errors.ase;
    aoe += cr.errors.aoe;
    ave += cr.errors.ave;
    aae += cr.errors.aae;
  }
  out.mean_errors.ate = ate / n_cls;
  out.mean_errors.ase = ase / n_cls;
  out.mean_errors.aoe = aoe / n_cls;
  out.mean_errors.ave = ave / n_cls;
  out.mean_errors.aae = aae / n_cls;
  out.mean_errors.empty_match_set = out.any_empty_tp_set;
  out.nds_score = nds(out.mean_ap, out.mean_errors.as_array());
  return out;
}

/// Single-sample convenience wrapper.
inline EvalResult evaluate(const DetectionSet& preds, const DetectionSet& gts,
                           const MetricConfig& cfg = {}) {
  return evaluate_grouped({{preds, gts}}, cfg);
}

}  // namespace bevkit::metrics
