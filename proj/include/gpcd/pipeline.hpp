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

#ifndef GPCD_PIPELINE_HPP_
#define GPCD_PIPELINE_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "gpcd/config.hpp"
#include "gpcd/detector.hpp"
#include "gpcd/estimators.hpp"
#include "gpcd/sim/scenario.hpp"

namespace gpcd {

/// Everything one experiment run needs. Built from a Config; every field has
/// a desk-scale default.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::filesystem::path out = "gpcd-out";
  bool paper_scale = false;

  sim::Plant plant = sim::Plant::planar2r_default();
  sim::SimConfig sim;

  // Datasets.
  int train_waypoints = 40;           ///< near-training set: random rests
  int test_waypoints = 10;            ///< held-out trajectory from the same family
  int generalization_waypoints = 10;  ///< followed by one circle lap
  double circle_radius = 0.2;
  double circle_speed = 0.1;

  // Training.
  std::vector<Variant> variants{kAllVariants[0], kAllVariants[1], kAllVariants[2]};
  std::size_t subset_size = 2000;
  double velocity_threshold = kDefaultVelocityThreshold;
  bool standardize = true;
  OptimizerConfig optimizer;

  // Detection.
  Variant detector_variant = Variant::kGatedSemiParametric;
  double filter_tau = 0.05;
  ThresholdRule threshold_rule;
  SegmentationRule segmentation;
  int calibration_folds = 5;
  int calibration_waypoints = 10;
  double validation_duration = 60.0;
  int push_joint = 0;
  double push_amplitude = 3.0;
  double push_duration = 1.0;

  /// Read every known key; unknown keys raise FormatError.
  static ExperimentConfig from(const Config& cfg);
  /// Canonical key/value text of this configuration.
  Config to_config() const;
  void validate() const;
  int dof() const { return plant.dof(); }
};

/// Dataset names written by `simulate`, in file order.
std::vector<std::string> dataset_names(const ExperimentConfig& cfg);

/// Collision-free mixed task: random rests, a circle lap and a final hold.
sim::Scenario mixed_task_scenario(int waypoints, double radius, double speed, double hold,
                                  double min_duration);

/// Scenario behind each named dataset.
sim::Scenario dataset_scenario(const ExperimentConfig& cfg, const std::string& name);
std::uint64_t dataset_seed(const ExperimentConfig& cfg, const std::string& name);

std::filesystem::path data_dir(const ExperimentConfig& cfg);
std::filesystem::path model_path(const ExperimentConfig& cfg, Variant v, int joint);

struct SimulateResult {
  std::vector<std::filesystem::path> files;
};
/// Generate every dataset, write CSV + metadata, update the manifest.
SimulateResult run_simulate(const ExperimentConfig& cfg);

struct TrainResult {
  std::map<std::pair<Variant, int>, Estimator> estimators;
  ThresholdConfig thresholds;
};
/// Train every (variant, joint) model on the near-training set, write models,
/// loss traces and subsets, then calibrate detection thresholds on the
/// collision-free calibration folds.
TrainResult run_train(const ExperimentConfig& cfg);

struct EvalRow {
  std::string estimator;
  int joint = 0;        ///< 1-based
  std::string regime;   ///< "quasi-static" or "dynamical"
  std::string dataset;  ///< "near-training" or "generalization"
  double nmse = 0.0;
  std::size_t samples = 0;
};
/// nMSE table for every trained model on both test sets, written to eval.csv.
std::vector<EvalRow> run_eval(const ExperimentConfig& cfg);

struct DetectResult {
  std::vector<DetectionEvent> events;
  std::vector<sim::Episode> episodes;
  std::filesystem::path events_file, trace_file;
};
/// Monitor one simulated trajectory (dataset name under data/) with the
/// calibrated thresholds. Throws CoverageError if thresholds are missing.
DetectResult run_detect(const ExperimentConfig& cfg, const std::string& dataset);

struct Report {
  Eigen::VectorXd friction_share;  ///< per joint, generalization set
  std::vector<EvalRow> table;
  /// Per joint: quasi-static generalization ordering SP_P < SP_S and SP_P < P_f.
  std::vector<bool> static_ordering;
  /// Per joint: dynamical near-training SP_P nMSE <= 2 x SP_S.
  std::vector<bool> dynamic_parity;
  std::size_t collision_events = 0, collision_episodes = 0, collision_matched = 0;
  std::size_t validation_events = 0;
  std::string text;
};
/// Summarize eval.csv and the detection outputs into report.json/report.txt.
Report run_report(const ExperimentConfig& cfg);

/// Read eval.csv back.
std::vector<EvalRow> read_eval_csv(const std::filesystem::path& path);

/// Exit code of the detect command: the event count capped at 125.
int detect_exit_code(std::size_t events);

}  // namespace gpcd

#endif  // GPCD_PIPELINE_HPP_
