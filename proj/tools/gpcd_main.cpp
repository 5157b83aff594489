// Copyright 2026 The gpcd Authors
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

// gpcd: simulate | train | eval | detect | report

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "gpcd/errors.hpp"
#include "gpcd/pipeline.hpp"

namespace {

constexpr int kRuntimeError = 1;
constexpr int kUsageError = 2;
constexpr int kDetectError = 126;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collision detection with semi-parametric current models"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool paper_scale = false;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "key/value configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "master seed");
  app.add_option("--out", out, "output directory");
  app.add_flag("--paper-scale", paper_scale, "large datasets and subset");
  app.add_option("--set", overrides, "override a configuration key, key=value")
      ->type_name("KEY=VALUE");

  auto* sim_cmd = app.add_subcommand("simulate", "generate every dataset");
  auto* train_cmd = app.add_subcommand("train", "fit estimators and calibrate thresholds");
  auto* eval_cmd = app.add_subcommand("eval", "nMSE table of every estimator");
  auto* detect_cmd =
      app.add_subcommand("detect", "monitor a trajectory; exit code = number of events (max 125)");
  std::string trajectory = "collision";
  detect_cmd->add_option("--trajectory", trajectory, "dataset name under <out>/data")
      ->capture_default_str();
  auto* report_cmd = app.add_subcommand("report", "summarize eval and detection outputs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsageError;
  }

  const bool detecting = detect_cmd->parsed();
  gpcd::ExperimentConfig cfg;
  try {
    gpcd::Config c = config_path.empty() ? gpcd::Config() : gpcd::Config::load(config_path);
    if (paper_scale) c.set("paper_scale", "true");
    if (seed) c.set("seed", std::to_string(*seed));
    if (!out.empty()) c.set("out", out);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw gpcd::FormatError("--set expects key=value, got '" + kv + "'");
      c.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg = gpcd::ExperimentConfig::from(c);
  } catch (const std::exception& e) {
    std::cerr << "gpcd: configuration error: " << e.what() << '\n';
    return detecting ? kDetectError : kUsageError;
  }

  try {
    if (sim_cmd->parsed()) {
      const auto r = gpcd::run_simulate(cfg);
      std::cout << "wrote " << r.files.size() << " files under " << cfg.out.string() << '\n';
    } else if (train_cmd->parsed()) {
      const auto r = gpcd::run_train(cfg);
      std::cout << "trained " << r.estimators.size() << " estimators; thresholds";
      for (Eigen::Index j = 0; j < r.thresholds.sigma.size(); ++j) {
        std::cout << " joint" << j + 1 << '=' << r.thresholds.sigma[j];
      }
      std::cout << '\n';
    } else if (eval_cmd->parsed()) {
      const auto rows = gpcd::run_eval(cfg);
      std::cout << "wrote " << rows.size() << " rows to " << (cfg.out / "eval.csv").string() << '\n';
    } else if (detecting) {
      const auto r = gpcd::run_detect(cfg, trajectory);
      for (const auto& e : r.events) {
        std::printf("event %.3f..%.3f s%s\n", e.start, e.end,
                    e.episode ? (" matches episode " + std::to_string(*e.episode + 1)).c_str()
                              : " (no ground-truth episode)");
      }
      std::cout << r.events.size() << " events, " << r.episodes.size()
                << " ground-truth episodes\n";
      return gpcd::detect_exit_code(r.events.size());
    } else if (report_cmd->parsed()) {
      std::cout << gpcd::run_report(cfg).text;
    }
  } catch (const std::exception& e) {
    std::cerr << "gpcd: " << e.what() << '\n';
    return detecting ? kDetectError : kRuntimeError;
  }
  return 0;
}
