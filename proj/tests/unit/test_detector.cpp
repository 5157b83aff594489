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

#include <doctest.h>

#include <cmath>
#include <numeric>

#include "gpcd/detector.hpp"
#include "gpcd/errors.hpp"
#include "gpcd/rng.hpp"

using namespace gpcd;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using doctest::Approx;

namespace {

std::vector<double> times(std::size_t n, double dt = 8e-3) {
  std::vector<double> t(n);
  for (std::size_t k = 0; k < n; ++k) t[k] = static_cast<double>(k) * dt;
  return t;
}

std::vector<bool> pattern(const std::string& s) {
  std::vector<bool> f;
  for (char c : s) f.push_back(c == '1');
  return f;
}

}  // namespace

TEST_CASE("identical currents give a zero signal") {
  Rng rng(1);
  MatrixXd i(200, 2);
  for (auto& x : i.reshaped()) x = rng.normal();
  const auto s = monitoring_signal(times(200), i, i, 0.05);
  CHECK(s.raw.cwiseAbs().maxCoeff() == 0.0);
  CHECK(s.filtered.cwiseAbs().maxCoeff() == 0.0);
  ThresholdConfig th;
  th.sigma = VectorXd::Constant(2, 0.01);
  const auto flags = detect(s, th);
  CHECK(std::none_of(flags.begin(), flags.end(), [](bool b) { return b; }));
  CHECK(segment_events(flags, s.t).empty());
}

TEST_CASE("first-order step response") {
  const double dt = 1e-3, tau = 0.05, h = 0.4;
  LowPassFilter f(tau);
  const int start = 10, lag = static_cast<int>(std::round(tau / dt));
  double y = 0.0;
  for (int k = 0; k <= start + lag; ++k) y = f.push(k >= start ? h : 0.0, k * dt);
  CHECK(y == Approx((1.0 - std::exp(-1.0)) * h).epsilon(1e-12));
  LowPassFilter pass(0.0);
  CHECK(pass.push(0.3, 0.0) == 0.3);
  CHECK(pass.push(-0.7, 0.01) == -0.7);
  CHECK_THROWS(LowPassFilter(-1.0));
}

TEST_CASE("filter starts at the first input") {
  LowPassFilter f(0.05);
  CHECK(f.push(2.0, 0.0) == 2.0);
  CHECK(f.push(2.0, 0.008) == Approx(2.0));
}

TEST_CASE("empirical quantile interpolates linearly") {
  CHECK(empirical_quantile({5, 1, 4, 2, 3}, 0.5) == Approx(3.0));
  CHECK(empirical_quantile({5, 1, 4, 2, 3}, 0.9) == Approx(4.6));
  CHECK(empirical_quantile({5, 1, 4, 2, 3}, 1.0) == 5.0);
  CHECK(empirical_quantile({5, 1, 4, 2, 3}, 0.0) == 1.0);
}

TEST_CASE("threshold calibration rules") {
  const std::size_t n = 500;
  MatrixXd s = MatrixXd::Constant(static_cast<Eigen::Index>(n), 2, 0.1);
  s.col(1) *= -1.0;
  const auto sig = monitoring_signal(times(n), s, MatrixXd::Zero(static_cast<Eigen::Index>(n), 2), 0.0);
  const std::vector<MonitoringSignal> v{sig};
  const auto th = calibrate_threshold(v);
  CHECK(th.sigma[0] == Approx(0.12));
  CHECK(th.sigma[1] == Approx(0.12));

  Rng rng(3);
  MatrixXd r(300, 2);
  for (auto& x : r.reshaped()) x = rng.normal();
  const auto sig2 = monitoring_signal(times(300), r, MatrixXd::Zero(300, 2), 0.0);
  const auto th2 = calibrate_threshold(std::vector<MonitoringSignal>{sig2}, ThresholdRule{1.0, 1.0}, 0.0);
  CHECK(th2.sigma[0] == r.col(0).cwiseAbs().maxCoeff());
  CHECK(th2.sigma[1] == r.col(1).cwiseAbs().maxCoeff());
  // Calibration bounds its own data.
  const auto f = detect(sig2, th2);
  CHECK(std::count(f.begin(), f.end(), true) >= 1);
  const auto th3 = calibrate_threshold(std::vector<MonitoringSignal>{sig2});
  const auto f3 = detect(sig2, th3);
  CHECK(std::count(f3.begin(), f3.end(), true) == 0);

  CHECK_THROWS_AS(calibrate_threshold(std::vector<MonitoringSignal>{}), CoverageError);
}

TEST_CASE("any-joint detection with inclusive threshold") {
  MatrixXd s = MatrixXd::Zero(6, 2);
  s(2, 1) = 0.5;
  s(4, 0) = -0.2;
  const auto f = detect(s, Eigen::Vector2d(0.2, 0.6));
  CHECK(f == pattern("000010"));
  const auto g = detect(s, Eigen::Vector2d(0.3, 0.5));
  CHECK(g == pattern("001000"));
}

TEST_CASE("detection is monotone in the threshold and permutation invariant") {
  Rng rng(4);
  MatrixXd s(400, 3);
  for (auto& x : s.reshaped()) x = rng.normal();
  const VectorXd sigma = Eigen::Vector3d(1.5, 2.0, 1.0);
  const auto base = detect(s, sigma);
  const auto raised = detect(s, sigma * 1.3);
  for (std::size_t k = 0; k < base.size(); ++k) CHECK((!raised[k] || base[k]));
  Eigen::PermutationMatrix<3> P;
  P.indices() = Eigen::Vector3i(2, 0, 1);
  CHECK(detect(s * P, P.transpose() * sigma) == base);
}

TEST_CASE("segmentation merges close runs and drops short ones") {
  CHECK(segment_events(pattern("0000000"), times(7)).empty());
  // Two runs 4 samples apart merge.
  auto ev = segment_events(pattern("0111100001110"), times(13));
  REQUIRE(ev.size() == 1);
  CHECK(ev[0].first == 1);
  CHECK(ev[0].last == 11);
  CHECK(ev[0].start == Approx(8e-3));
  // A gap of exactly merge_gap samples keeps runs apart.
  ev = segment_events(pattern("1110000000000111"), times(16), SegmentationRule{3, 10});
  REQUIRE(ev.size() == 2);
  // Single-sample spikes vanish.
  CHECK(segment_events(pattern("0010000000000000001"), times(19)).empty());
  std::vector<double> t = times(5);
  t[3] = t[2];
  CHECK_THROWS_AS(segment_events(pattern("11111"), t), std::invalid_argument);
}

TEST_CASE("events report joints, peaks and latency") {
  const std::size_t n = 300;
  MatrixXd meas = MatrixXd::Zero(static_cast<Eigen::Index>(n), 2);
  for (Eigen::Index k = 100; k < 160; ++k) meas(k, 1) = 1.0;
  const auto sig = monitoring_signal(times(n), meas, MatrixXd::Zero(static_cast<Eigen::Index>(n), 2), 0.0);
  ThresholdConfig th;
  th.sigma = Eigen::Vector2d(0.5, 0.5);
  auto ev = segment_events(detect(sig, th), sig.t);
  annotate_events(ev, sig, th);
  REQUIRE(ev.size() == 1);
  CHECK(ev[0].joints == std::vector<int>{1});
  CHECK(ev[0].peak[1] == 1.0);
  const std::vector<sim::Episode> eps{{1, 0.7, 1.4, 2.0}, {1, 0.78, 1.2, 2.0}};
  match_episodes(ev, eps);
  REQUIRE(ev[0].episode.has_value());
  CHECK(*ev[0].episode == 0);
  CHECK(*ev[0].latency >= 0.0);
  CHECK(*ev[0].latency <= eps[0].end - eps[0].start);
  CHECK(*ev[0].latency == Approx(100 * 8e-3 - 0.7));
  const std::vector<sim::Episode> none{{0, 5.0, 6.0, 1.0}};
  match_episodes(ev, none);
  CHECK_FALSE(ev[0].episode.has_value());
}

TEST_CASE("streaming detector reproduces the batch result") {
  Rng rng(5);
  const std::size_t n = 3000;
  MatrixXd meas(static_cast<Eigen::Index>(n), 2), pred = MatrixXd::Zero(static_cast<Eigen::Index>(n), 2);
  for (auto& x : meas.reshaped()) x = 0.02 * rng.normal();
  for (Eigen::Index k = 500; k < 620; ++k) meas(k, 0) += 0.3;
  for (Eigen::Index k = 1500; k < 1530; ++k) meas(k, 1) -= 0.3 * ((k / 7) % 2);
  for (Eigen::Index k = 2990; k < 3000; ++k) meas(k, 1) += 0.5;
  const auto t = times(n);
  const auto sig = monitoring_signal(t, meas, pred, 0.02);
  ThresholdConfig th;
  th.sigma = Eigen::Vector2d(0.05, 0.05);
  th.tau = 0.02;
  auto batch = segment_events(detect(sig, th), sig.t);
  annotate_events(batch, sig, th);
  StreamingDetector sd(th);
  for (std::size_t k = 0; k < n; ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    sd.push(t[k], meas.row(r).transpose(), pred.row(r).transpose());
  }
  const auto stream = sd.finish();
  REQUIRE(stream.size() == batch.size());
  CHECK(batch.size() >= 3);
  for (std::size_t e = 0; e < batch.size(); ++e) {
    CHECK(stream[e].first == batch[e].first);
    CHECK(stream[e].last == batch[e].last);
    CHECK(stream[e].joints == batch[e].joints);
    CHECK((stream[e].peak - batch[e].peak).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("calibration data must be collision free") {
  sim::Trajectory tr;
  tr.samples.push_back(JointSample::zero(2));
  CHECK_NOTHROW(check_collision_free(tr));
  tr.episodes.push_back({0, 0.0, 1.0, 3.0});
  CHECK_THROWS_AS(check_collision_free(tr), CoverageError);
  tr.episodes.clear();
  tr.samples[0].tau_ext[1] = 0.1;
  CHECK_THROWS_AS(check_collision_free(tr), CoverageError);
}
