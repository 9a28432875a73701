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

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bevkit/cli.hpp"
#include "bevkit/config.hpp"

namespace {

bevkit::config::PipelineConfig load_or_default(const std::string& path,
                                               std::optional<std::uint64_t> seed_override) {
  bevkit::config::PipelineConfig cfg;
  if (!path.empty()) cfg = bevkit::config::load_config(path);
  if (seed_override) cfg.seed = *seed_override;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-camera BEV perception toolkit: synthetic scenes, view "
               "transformation, detection codec, and metrics"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "pipeline config file")->capture_default_str();
  app.add_option("--seed", seed, "override the config seed");

  // gen
  auto* gen = app.add_subcommand("gen", "generate synthetic scene files");
  int gen_n = 1;
  std::string gen_out;
  int gen_jobs = 1;
  gen->add_option("--num,-n", gen_n, "number of samples")->capture_default_str();
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--jobs", gen_jobs, "worker threads")->capture_default_str();

  // infer
  auto* infer = app.add_subcommand("infer", "run the detection pipeline over scene files");
  std::string infer_scenes, infer_out;
  int infer_jobs = 1;
  infer->add_option("scenes", infer_scenes, "scene manifest file or directory")->required();
  infer->add_option("--out", infer_out, "detection JSON output path")->required();
  infer->add_option("--jobs", infer_jobs, "worker threads")->capture_default_str();

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate detections against ground truth");
  std::string eval_preds, eval_gts, eval_out, eval_rows;
  bool nds_only = false;
  eval->add_option("preds", eval_preds, "detection JSON (or indicator rows with --nds-only)");
  eval->add_option("gts", eval_gts, "ground-truth detection JSON");
  eval->add_option("--out", eval_out, "output directory for result files");
  eval->add_flag("--nds-only", nds_only, "treat the input as precomputed indicator rows");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "time the splat kernels against each other");
  std::vector<std::size_t> bench_counts{100, 10000, 1000000};
  std::string bench_out;
  bench_cmd->add_option("--counts", bench_counts, "point counts to benchmark")->capture_default_str();
  bench_cmd->add_option("--out", bench_out, "JSON report path");

  // check
  auto* check_cmd = app.add_subcommand("check", "run the full invariant suite");
  int check_trials = 100;
  bool corrupt_unprojection = false;
  check_cmd->add_option("--trials", check_trials, "trials per invariant")->capture_default_str();
  check_cmd->add_flag("--corrupt-unprojection", corrupt_unprojection)->group("");  // hidden mutation hook

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      bevkit::cli::GenOptions o;
      o.cfg = load_or_default(config_path, seed);
      o.n_samples = gen_n;
      o.out_dir = gen_out;
      o.jobs = gen_jobs;
      return bevkit::cli::run_gen(o);
    }
    if (*infer) {
      bevkit::cli::InferOptions o;
      o.cfg = load_or_default(config_path, seed);
      o.scenes = infer_scenes;
      o.out = infer_out;
      o.jobs = infer_jobs;
      return bevkit::cli::run_infer(o);
    }
    if (*eval) {
      bevkit::cli::EvalOptions o;
      o.nds_only = nds_only;
      if (nds_only) {
        if (eval_preds.empty()) throw std::invalid_argument("eval --nds-only needs a rows file");
        o.nds_rows = eval_preds;
      } else {
        if (eval_preds.empty() || eval_gts.empty())
          throw std::invalid_argument("eval needs predictions and ground truth files");
        o.preds = eval_preds;
        o.gts = eval_gts;
        o.metric = load_or_default(config_path, seed).metric;
      }
      o.out_dir = eval_out;
      return bevkit::cli::run_eval(o);
    }
    if (*bench_cmd) {
      bevkit::cli::BenchOptions o;
      o.cfg = load_or_default(config_path, seed);
      o.counts = bench_counts;
      o.out = bench_out;
      return bevkit::cli::run_bench(o);
    }
    if (*check_cmd) {
      bevkit::cli::CheckCliOptions o;
      const auto cfg = load_or_default(config_path, seed);
      o.opts.seed = cfg.seed;
      o.opts.trials = check_trials;
      o.opts.corrupt_unprojection = corrupt_unprojection;
      return bevkit::cli::run_check(o);
    }
  } catch (const bevkit::SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
