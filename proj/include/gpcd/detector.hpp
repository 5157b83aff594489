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

#ifndef GPCD_DETECTOR_HPP_
#define GPCD_DETECTOR_HPP_

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

#include "gpcd/estimators.hpp"
#include "gpcd/sim/scenario.hpp"

namespace gpcd {

/// Residual current per joint on a common time base.
struct MonitoringSignal {
  std::vector<double> t;
  Eigen::MatrixXd raw;       ///< i - i_hat, one column per joint
  Eigen::MatrixXd filtered;  ///< after the first-order low-pass
  Eigen::MatrixXd measured;  ///< i
  Eigen::MatrixXd predicted; ///< i_hat

  Eigen::Index size() const { return raw.rows(); }
  int dof() const { return static_cast<int>(raw.cols()); }
};

/// First-order low-pass, exact for a piecewise-constant input:
/// y_k = a y_{k-1} + (1 - a) x_{k-1}, a = exp(-dt/tau), y_0 = x_0.
/// A step of height h therefore reaches (1 - 1/e) h after tau seconds.
/// tau = 0 passes the input through.
class LowPassFilter {
 public:
  explicit LowPassFilter(double tau = 0.0);
  double push(double x, double t);
  void reset();
  double tau() const { return tau_; }

 private:
  double tau_;
  bool primed_ = false;
  double t_prev_ = 0.0, x_prev_ = 0.0, y_ = 0.0;
};

/// Build the monitoring signal from already predicted currents.
MonitoringSignal monitoring_signal(std::span<const double> t, const Eigen::MatrixXd& measured,
                                   const Eigen::MatrixXd& predicted, double tau);

/// Predict each joint with its estimator (`estimators[j]` for joint j), then
/// form the signal.
MonitoringSignal monitoring_signal(std::span<const Estimator> estimators,
                                   std::span<const JointSample> samples, double tau);

struct ThresholdRule {
  double quantile = 0.9999;
  double margin = 1.2;
};

struct ThresholdConfig {
  Eigen::VectorXd sigma;  ///< per-joint threshold on |s|, A
  ThresholdRule rule;
  double tau = 0.05;      ///< filter time constant used during calibration, s

  void validate() const;
};

/// Linear-interpolation empirical quantile of the values (q in [0, 1]).
double empirical_quantile(std::vector<double> values, double q);

/// sigma_j = margin * quantile(|s_j|) over all calibration signals (filtered
/// columns). Throws CoverageError on an empty set.
ThresholdConfig calibrate_threshold(std::span<const MonitoringSignal> signals,
                                    const ThresholdRule& rule = {}, double tau = 0.05);

/// Raises CoverageError if any calibration sample lies inside a ground-truth
/// episode or carries a nonzero external torque.
void check_collision_free(const sim::Trajectory& traj);

/// flag_k = any_j |s_j(k)| >= sigma_j, on the filtered columns.
std::vector<bool> detect(const MonitoringSignal& signal, const ThresholdConfig& cfg);
std::vector<bool> detect(const Eigen::MatrixXd& s, const Eigen::VectorXd& sigma);

struct DetectionEvent {
  double start = 0.0, end = 0.0;
  std::size_t first = 0, last = 0;  ///< sample indices, inclusive
  std::vector<int> joints;          ///< joints that crossed their threshold
  Eigen::VectorXd peak;             ///< max |s_j| inside the event
  std::optional<double> latency;    ///< start minus matched episode start
  std::optional<int> episode;       ///< index of the matched episode
};

struct SegmentationRule {
  std::size_t min_samples = 3;  ///< shortest run kept as an event
  std::size_t merge_gap = 10;   ///< runs separated by fewer FALSE samples fuse
};

/// Contiguous TRUE runs become events. Runs closer than the merge gap are
/// fused first, then short events dropped. Throws std::invalid_argument
/// for non-monotone timestamps.
std::vector<DetectionEvent> segment_events(const std::vector<bool>& flags,
                                           std::span<const double> t,
                                           const SegmentationRule& rule = {});

/// Fill joints and peaks from the signal.
void annotate_events(std::vector<DetectionEvent>& events, const MonitoringSignal& signal,
                     const ThresholdConfig& cfg);

/// Pair each event with the first ground-truth episode it overlaps.
void match_episodes(std::vector<DetectionEvent>& events,
                    std::span<const sim::Episode> episodes);

/// Incremental detector with bounded state: one filter per joint and the
/// currently open run.
class StreamingDetector {
 public:
  StreamingDetector(ThresholdConfig cfg, SegmentationRule rule = {});

  /// Feed one sample of measured and predicted currents. Returns the flag.
  bool push(double t, const Eigen::VectorXd& measured, const Eigen::VectorXd& predicted);
  /// Close any open run; returns every event finalized so far.
  std::vector<DetectionEvent> finish();
  const std::vector<DetectionEvent>& events() const { return events_; }

 private:
  void close_run();

  ThresholdConfig cfg_;
  SegmentationRule rule_;
  std::vector<LowPassFilter> filters_;
  std::size_t index_ = 0;
  double last_t_ = 0.0;
  bool open_ = false;
  std::size_t gap_ = 0;
  DetectionEvent current_;
  Eigen::VectorXd pending_peak_;
  std::vector<DetectionEvent> events_;
};

}  // namespace gpcd

#endif  // GPCD_DETECTOR_HPP_
