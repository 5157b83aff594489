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

#include "gpcd/detector.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gpcd/errors.hpp"

namespace gpcd {

using Eigen::MatrixXd;
using Eigen::VectorXd;

LowPassFilter::LowPassFilter(double tau) : tau_(tau) {
  if (!(tau >= 0.0)) throw std::invalid_argument("filter time constant must be >= 0");
}

void LowPassFilter::reset() { primed_ = false; }

double LowPassFilter::push(double x, double t) {
  if (tau_ == 0.0) return x;
  if (!primed_) {
    primed_ = true;
    y_ = x;
  } else {
    const double a = std::exp(-(t - t_prev_) / tau_);
    y_ = a * y_ + (1.0 - a) * x_prev_;
  }
  t_prev_ = t;
  x_prev_ = x;
  return y_;
}

MonitoringSignal monitoring_signal(std::span<const double> t, const MatrixXd& measured,
                                   const MatrixXd& predicted, double tau) {
  if (measured.rows() != predicted.rows() || measured.cols() != predicted.cols() ||
      static_cast<std::size_t>(measured.rows()) != t.size()) {
    throw DimensionError("monitoring signal: currents and timestamps differ in shape");
  }
  MonitoringSignal s;
  s.t.assign(t.begin(), t.end());
  s.measured = measured;
  s.predicted = predicted;
  s.raw = measured - predicted;
  s.filtered.resizeLike(s.raw);
  for (Eigen::Index j = 0; j < s.raw.cols(); ++j) {
    LowPassFilter f(tau);
    for (Eigen::Index k = 0; k < s.raw.rows(); ++k) {
      s.filtered(k, j) = f.push(s.raw(k, j), t[static_cast<std::size_t>(k)]);
    }
  }
  return s;
}

MonitoringSignal monitoring_signal(std::span<const Estimator> estimators,
                                   std::span<const JointSample> samples, double tau) {
  const auto N = static_cast<Eigen::Index>(samples.size());
  const auto n = static_cast<Eigen::Index>(estimators.size());
  MatrixXd measured(N, n), predicted(N, n);
  std::vector<double> t(samples.size());
  for (Eigen::Index k = 0; k < N; ++k) {
    const auto& s = samples[static_cast<std::size_t>(k)];
    if (s.i_meas.size() < n) throw DimensionError("sample has fewer joints than estimators");
    t[static_cast<std::size_t>(k)] = s.t;
    for (Eigen::Index j = 0; j < n; ++j) measured(k, j) = s.i_meas[j];
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    const Estimator& e = estimators[static_cast<std::size_t>(j)];
    if (e.joint != j) throw DimensionError("estimators must be ordered by joint");
    predicted.col(j) = predict_current(e, samples, false).mean;
  }
  return monitoring_signal(t, measured, predicted, tau);
}

void ThresholdConfig::validate() const {
  if (sigma.size() == 0) throw std::invalid_argument("threshold config has no joints");
  for (Eigen::Index j = 0; j < sigma.size(); ++j) {
    if (!(sigma[j] > 0.0)) throw std::invalid_argument("thresholds must be > 0");
  }
  if (!(tau >= 0.0)) throw std::invalid_argument("filter time constant must be >= 0");
}

double empirical_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw CoverageError("quantile of an empty set");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

ThresholdConfig calibrate_threshold(std::span<const MonitoringSignal> signals,
                                    const ThresholdRule& rule, double tau) {
  if (signals.empty()) throw CoverageError("no calibration signals");
  if (!(rule.margin > 0.0)) throw std::invalid_argument("calibration margin must be > 0");
  const int n = signals.front().dof();
  ThresholdConfig cfg;
  cfg.rule = rule;
  cfg.tau = tau;
  cfg.sigma.resize(n);
  for (int j = 0; j < n; ++j) {
    std::vector<double> v;
    for (const auto& s : signals) {
      if (s.dof() != n) throw DimensionError("calibration signals differ in joint count");
      for (Eigen::Index k = 0; k < s.size(); ++k) v.push_back(std::abs(s.filtered(k, j)));
    }
    cfg.sigma[j] = rule.margin * empirical_quantile(std::move(v), rule.quantile);
  }
  // A perfectly predicted joint would otherwise flag any nonzero residual.
  for (int j = 0; j < n; ++j) cfg.sigma[j] = std::max(cfg.sigma[j], 1e-12);
  return cfg;
}

void check_collision_free(const sim::Trajectory& traj) {
  for (const auto& s : traj.samples) {
    if (traj.in_episode(s.t) || s.tau_ext.cwiseAbs().maxCoeff() > 0.0) {
      throw CoverageError("calibration trajectory '" + traj.name +
                          "' contains an external torque at t = " + std::to_string(s.t));
    }
  }
}

std::vector<bool> detect(const MatrixXd& s, const VectorXd& sigma) {
  if (s.cols() != sigma.size()) throw DimensionError("detect: one threshold per joint needed");
  std::vector<bool> flags(static_cast<std::size_t>(s.rows()), false);
  for (Eigen::Index k = 0; k < s.rows(); ++k) {
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
      if (std::abs(s(k, j)) >= sigma[j]) {
        flags[static_cast<std::size_t>(k)] = true;
        break;
      }
    }
  }
  return flags;
}

std::vector<bool> detect(const MonitoringSignal& signal, const ThresholdConfig& cfg) {
  return detect(signal.filtered, cfg.sigma);
}

std::vector<DetectionEvent> segment_events(const std::vector<bool>& flags,
                                           std::span<const double> t,
                                           const SegmentationRule& rule) {
  if (flags.size() != t.size()) throw DimensionError("flags and timestamps differ in length");
  for (std::size_t k = 1; k < t.size(); ++k) {
    if (!(t[k] > t[k - 1])) {
      throw std::invalid_argument("timestamps are not strictly increasing at index " +
                                  std::to_string(k));
    }
  }
  // Raw runs.
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  for (std::size_t k = 0; k < flags.size(); ++k) {
    if (!flags[k]) continue;
    if (!runs.empty() && runs.back().second + 1 == k) {
      runs.back().second = k;
    } else {
      runs.emplace_back(k, k);
    }
  }
  // Fuse runs whose gap is shorter than the merge gap.
  std::vector<std::pair<std::size_t, std::size_t>> merged;
  for (const auto& r : runs) {
    if (!merged.empty() && r.first - merged.back().second - 1 < rule.merge_gap) {
      merged.back().second = r.second;
    } else {
      merged.push_back(r);
    }
  }
  std::vector<DetectionEvent> events;
  for (const auto& [a, b] : merged) {
    if (b - a + 1 < rule.min_samples) continue;
    DetectionEvent e;
    e.first = a;
    e.last = b;
    e.start = t[a];
    e.end = t[b];
    events.push_back(e);
  }
  return events;
}

void annotate_events(std::vector<DetectionEvent>& events, const MonitoringSignal& signal,
                     const ThresholdConfig& cfg) {
  const int n = signal.dof();
  for (auto& e : events) {
    e.peak = VectorXd::Zero(n);
    e.joints.clear();
    for (int j = 0; j < n; ++j) {
      bool crossed = false;
      for (std::size_t k = e.first; k <= e.last; ++k) {
        const double v = std::abs(signal.filtered(static_cast<Eigen::Index>(k), j));
        e.peak[j] = std::max(e.peak[j], v);
        crossed = crossed || v >= cfg.sigma[j];
      }
      if (crossed) e.joints.push_back(j);
    }
  }
}

void match_episodes(std::vector<DetectionEvent>& events, std::span<const sim::Episode> episodes) {
  for (auto& e : events) {
    e.latency.reset();
    e.episode.reset();
    for (std::size_t i = 0; i < episodes.size(); ++i) {
      const auto& ep = episodes[i];
      if (e.start <= ep.end && e.end >= ep.start) {
        e.episode = static_cast<int>(i);
        e.latency = std::max(0.0, e.start - ep.start);
        break;
      }
    }
  }
}

StreamingDetector::StreamingDetector(ThresholdConfig cfg, SegmentationRule rule)
    : cfg_(std::move(cfg)), rule_(rule) {
  cfg_.validate();
  filters_.assign(static_cast<std::size_t>(cfg_.sigma.size()), LowPassFilter(cfg_.tau));
}

bool StreamingDetector::push(double t, const VectorXd& measured, const VectorXd& predicted) {
  const auto n = cfg_.sigma.size();
  if (measured.size() != n || predicted.size() != n) {
    throw DimensionError("streaming detector: one current per joint needed");
  }
  if (index_ > 0 && !(t > last_t_)) throw std::invalid_argument("timestamps must increase");
  VectorXd s(n);
  bool flag = false;
  for (Eigen::Index j = 0; j < n; ++j) {
    s[j] = filters_[static_cast<std::size_t>(j)].push(measured[j] - predicted[j], t);
    flag = flag || std::abs(s[j]) >= cfg_.sigma[j];
  }

  if (flag) {
    if (open_ && gap_ < rule_.merge_gap) {
      current_.last = index_;
      current_.end = t;
      for (Eigen::Index j = 0; j < n; ++j) {
        current_.peak[j] = std::max(current_.peak[j], pending_peak_[j]);
      }
    } else {
      if (open_) close_run();
      open_ = true;
      current_ = DetectionEvent{};
      current_.first = current_.last = index_;
      current_.start = current_.end = t;
      current_.peak = VectorXd::Zero(n);
    }
    gap_ = 0;
    pending_peak_ = VectorXd::Zero(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      current_.peak[j] = std::max(current_.peak[j], std::abs(s[j]));
      if (std::abs(s[j]) >= cfg_.sigma[j] &&
          std::find(current_.joints.begin(), current_.joints.end(), j) == current_.joints.end()) {
        current_.joints.push_back(static_cast<int>(j));
      }
    }
  } else if (open_) {
    // Gap samples count toward the peak only if the run resumes.
    pending_peak_ = pending_peak_.cwiseMax(s.cwiseAbs());
    ++gap_;
    if (gap_ >= rule_.merge_gap) close_run();
  }
  last_t_ = t;
  ++index_;
  return flag;
}

void StreamingDetector::close_run() {
  if (open_ && current_.last - current_.first + 1 >= rule_.min_samples) {
    std::sort(current_.joints.begin(), current_.joints.end());
    events_.push_back(current_);
  }
  open_ = false;
  gap_ = 0;
}

std::vector<DetectionEvent> StreamingDetector::finish() {
  close_run();
  return events_;
}

}  // namespace gpcd
