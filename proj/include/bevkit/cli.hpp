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
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "bevkit/bench.hpp"
#include "bevkit/checks.hpp"
#include "bevkit/config.hpp"
#include "bevkit/json_io.hpp"
#include "bevkit/metrics.hpp"
#include "bevkit/pipeline.hpp"
#include "bevkit/scenegen.hpp"

// Command implementations behind the CLI: gen, infer, eval, bench, check.
// They are plain functions over option structs so tests can drive them
// without spawning a process. Every command is deterministic given
// (config, seed); manifests embed the config hash.

namespace bevkit::cli {

namespace fs = std::filesystem;

/// Color is only ever used for check/eval pass-fail lines; NO_COLOR or a
/// non-tty consumer turns it off.
inline bool color_enabled() {
  const char* nc = std::getenv("NO_COLOR");
  return nc == nullptr || nc[0] == '\0';
}

inline const char* color_green() { return color_enabled() ? "\x1b[32m" : ""; }
inline const char* color_red() { return color_enabled() ? "\x1b[31m" : ""; }
inline const char* color_reset() { return color_enabled() ? "\x1b[0m" : ""; }

inline std::string sample_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "sample_%05d", index);
  return buf;
}

/// Run fn(i) for i in [0, n) across `jobs` workers. Results must be written
/// into per-index slots by the caller; worker count never changes output.
/// The first exception thrown by any worker is rethrown after all join.
template <typename Fn>
inline void parallel_for(int n, int jobs, Fn&& fn) {
  jobs = std::max(1, jobs);
  if (jobs == 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  const int n_workers = std::min(jobs, n);
  workers.reserve(n_workers);
  for (int w = 0; w < n_workers; ++w) {
    workers.emplace_back([&] {
      try {
        for (int i = next.fetch_add(1); i < n && !failed.load(); i = next.fetch_add(1)) fn(i);
      } catch (...) {
        const std::scoped_lock lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
      }
    });
  }
  for (auto& t : workers) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------
// gen

struct GenOptions {
  config::PipelineConfig cfg;
  int n_samples = 1;
  std::string out_dir;
  int jobs = 1;
};

/// Write n scene files, a ground-truth file, and a manifest into out_dir.
inline int run_gen(const GenOptions& opt) {
  if (opt.n_samples < 0) throw std::invalid_argument("gen: n_samples must be >= 0");
  std::error_code ec;
  fs::create_directories(opt.out_dir, ec);
  if (ec) throw IoError("gen: cannot create output directory: " + opt.out_dir);

  const std::string hash = config::config_hash(opt.cfg);
  std::vector<std::string> files(opt.n_samples);
  std::vector<json_io::SampleDetections> gts(opt.n_samples);

  parallel_for(opt.n_samples, opt.jobs, [&](int i) {
    SeedStream stream = SeedStream(opt.cfg.seed, "scenegen").fork(i);
    const auto sample = scenegen::generate_scene(opt.cfg.scene, stream.next_u64(), sample_name(i));
    const std::string file = sample_name(i) + ".json";
    json_io::write_json_file((fs::path(opt.out_dir) / file).string(),
                             json_io::scene_to_json(sample));
    files[i] = file;
    gts[i] = {sample.sample_id, sample.boxes};
  });

  json_io::write_json_file((fs::path(opt.out_dir) / "ground_truth.json").string(),
                           json_io::detections_to_json(gts, hash));
  nlohmann::json manifest{{"format_version", json_io::kFormatVersion},
                          {"config_hash", hash},
                          {"seed", opt.cfg.seed},
                          {"n_samples", opt.n_samples},
                          {"files", files}};
  json_io::write_json_file((fs::path(opt.out_dir) / "manifest.json").string(), manifest);
  return 0;
}

// ---------------------------------------------------------------------------
// infer

struct InferOptions {
  config::PipelineConfig cfg;
  std::string scenes;  // manifest file or directory containing manifest.json
  std::string out;     // detection JSON path
  int jobs = 1;
};

inline std::string find_manifest(const std::string& scenes) {
  fs::path p(scenes);
  if (fs::is_directory(p)) p /= "manifest.json";
  if (!fs::exists(p)) throw IoError("infer: no manifest at " + p.string());
  return p.string();
}

inline int run_infer(const InferOptions& opt) {
  const fs::path manifest_path(find_manifest(opt.scenes));
  const nlohmann::json manifest = json_io::read_json_file(manifest_path.string());
  json_io::check_version(manifest, "manifest");
  const auto files = manifest.at("files").get<std::vector<std::string>>();
  const fs::path dir = manifest_path.parent_path();

  std::vector<json_io::SampleDetections> results(files.size());
  parallel_for(static_cast<int>(files.size()), opt.jobs, [&](int i) {
    const auto scene = json_io::scene_from_json(json_io::read_json_file((dir / files[i]).string()));
    json_io::SampleDetections out;
    out.sample_id = scene.sample_id;
    out.detections = pipeline::infer_sample(scene, opt.cfg, static_cast<std::uint64_t>(i));
    results[i] = std::move(out);
  });

  json_io::write_json_file(opt.out,
                           json_io::detections_to_json(results, config::config_hash(opt.cfg)));
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
  std::string preds;
  std::string gts;
  metrics::MetricConfig metric;
  std::string out_dir;  // optional; writes eval_result.json and eval_table.txt
  bool nds_only = false;
  std::string nds_rows;  // input rows file for --nds-only
};

inline std::string format_eval_table(const metrics::EvalResult& e,
                                     const metrics::MetricConfig& cfg) {
  std::ostringstream os;
  os << "class      gts";
  for (const double t : cfg.dist_thresholds) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "  AP@%-4.1f", t);
    os << buf;
  }
  os << "     ATE     ASE     AOE     AVE     AAE\n";
  for (const auto& [cls, cr] : e.per_class) {
    char head[32];
    std::snprintf(head, sizeof(head), "%-8d %5zu", cls, cr.num_gts);
    os << head;
    for (const double t : cfg.dist_thresholds) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "  %6.4f", cr.ap_by_threshold.at(t));
      os << buf;
    }
    char tail[64];
    std::snprintf(tail, sizeof(tail), "  %6.4f  %6.4f  %6.4f  %6.4f  %6.4f\n", cr.errors.ate,
                  cr.errors.ase, cr.errors.aoe, cr.errors.ave, cr.errors.aae);
    os << tail;
  }
  char summary[256];
  std::snprintf(summary, sizeof(summary),
                "mAP %.4f | mATE %.4f | mASE %.4f | mAOE %.4f | mAVE %.4f | mAAE %.4f | NDS %.4f\n",
                e.mean_ap, e.mean_errors.ate, e.mean_errors.ase, e.mean_errors.aoe,
                e.mean_errors.ave, e.mean_errors.aae, e.nds_score);
  os << summary;
  return os.str();
}

/// --nds-only: rows of precomputed indicators in, NDS out.
/// Input schema: {"rows": [{"name", "map", "ate", "ase", "aoe", "ave", "aae"}]}
inline int run_eval_nds_only(const EvalOptions& opt, std::ostream& out_stream = std::cout) {
  const nlohmann::json in = json_io::read_json_file(opt.nds_rows);
  nlohmann::json out_rows = nlohmann::json::array();
  for (const auto& row : in.at("rows")) {
    const double v = metrics::nds(row.at("map"),
                                  {row.at("ate"), row.at("ase"), row.at("aoe"), row.at("ave"),
                                   row.at("aae")});
    nlohmann::json o = row;
    o["nds"] = v;
    out_rows.push_back(o);
    out_stream << (row.contains("name") ? row.at("name").get<std::string>() : std::string("row"))
               << ": NDS " << v << "\n";
  }
  if (!opt.out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(opt.out_dir, ec);
    json_io::write_json_file((fs::path(opt.out_dir) / "nds.json").string(),
                             nlohmann::json{{"format_version", json_io::kFormatVersion},
                                            {"rows", out_rows}});
  }
  return 0;
}

inline int run_eval(const EvalOptions& opt, std::ostream& out_stream = std::cout) {
  if (opt.nds_only) return run_eval_nds_only(opt, out_stream);

  const auto preds = json_io::detections_from_json(json_io::read_json_file(opt.preds));
  const auto gts = json_io::detections_from_json(json_io::read_json_file(opt.gts));

  std::map<std::string, const DetectionSet*> gt_by_id;
  for (const auto& g : gts) gt_by_id[g.sample_id] = &g.detections;
  std::vector<std::string> missing;
  std::vector<metrics::SamplePair> pairs;
  std::map<std::string, bool> seen;
  for (const auto& p : preds) {
    if (!gt_by_id.count(p.sample_id)) {
      missing.push_back(p.sample_id);
      continue;
    }
    seen[p.sample_id] = true;
    pairs.push_back({p.detections, *gt_by_id[p.sample_id]});
  }
  for (const auto& g : gts)
    if (!seen.count(g.sample_id)) missing.push_back(g.sample_id);
  if (!missing.empty()) {
    std::sort(missing.begin(), missing.end());
    std::ostringstream os;
    os << "eval: sample ids do not align; missing:";
    for (const auto& id : missing) os << ' ' << id;
    throw IoError(os.str());
  }

  const metrics::EvalResult result = metrics::evaluate_grouped(pairs, opt.metric);
  const std::string table = format_eval_table(result, opt.metric);
  out_stream << table;
  if (!opt.out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(opt.out_dir, ec);
    json_io::write_json_file((fs::path(opt.out_dir) / "eval_result.json").string(),
                             json_io::eval_to_json(result));
    std::ofstream tf(fs::path(opt.out_dir) / "eval_table.txt");
    tf << table;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// bench

struct BenchOptions {
  config::PipelineConfig cfg;
  std::vector<std::size_t> counts{100, 10000, 1000000};
  std::string out;  // optional report path
};

inline int run_bench(const BenchOptions& opt, std::ostream& out_stream = std::cout) {
  const auto report = bench::run(opt.counts, opt.cfg.grid, opt.cfg.seed);
  nlohmann::json jcounts = nlohmann::json::array();
  out_stream << "kernel         count        time_ms   speedup   max_rel_error\n";
  for (const auto& cr : report.per_count) {
    for (const auto* kt : {&cr.naive, &cr.sorted}) {
      char speedup[24];
      if (kt == &cr.sorted)
        std::snprintf(speedup, sizeof(speedup), "%.2fx", cr.speedup_sorted_over_naive);
      else
        std::snprintf(speedup, sizeof(speedup), "-");
      char line[160];
      std::snprintf(line, sizeof(line), "%-12s %9zu %12.3f %9s   %.3e\n", kt->kernel.c_str(),
                    kt->count, static_cast<double>(kt->nanoseconds) / 1e6, speedup,
                    kt->max_rel_error);
      out_stream << line;
    }
    jcounts.push_back(nlohmann::json{
        {"count", cr.count},
        {"kernels",
         {{{"kernel", cr.naive.kernel}, {"count", cr.naive.count}, {"nanoseconds", cr.naive.nanoseconds}, {"max_rel_error", cr.naive.max_rel_error}},
          {{"kernel", cr.sorted.kernel}, {"count", cr.sorted.count}, {"nanoseconds", cr.sorted.nanoseconds}, {"max_rel_error", cr.sorted.max_rel_error}}}},
        {"speedup_sorted_over_naive", cr.speedup_sorted_over_naive}});
  }
  if (!opt.out.empty()) {
    json_io::write_json_file(opt.out, nlohmann::json{{"format_version", json_io::kFormatVersion},
                                                     {"results", jcounts},
                                                     {"naive_time_monotone", report.naive_time_monotone}});
  }
  return 0;
}

// ---------------------------------------------------------------------------
// check

struct CheckCliOptions {
  checks::CheckOptions opts;
};

inline int run_check(const CheckCliOptions& opt, std::ostream& out_stream = std::cout) {
  const auto results = checks::run_all(opt.opts);
  int failures = 0;
  for (const auto& r : results) {
    if (r.pass) {
      out_stream << color_green() << "[PASS]" << color_reset() << ' ' << r.name << " (worst "
                 << r.worst << ")\n";
    } else {
      ++failures;
      out_stream << color_red() << "[FAIL]" << color_reset() << ' ' << r.name << ": " << r.detail
                 << "\n";
    }
  }
  out_stream << (failures == 0 ? "all invariants hold" : "invariant failures: " + std::to_string(failures))
             << " (" << results.size() << " checks, seed " << opt.opts.seed << ", trials "
             << opt.opts.trials << ")\n";
  return failures == 0 ? 0 : 1;
}

}  // namespace bevkit::cli
