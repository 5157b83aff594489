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

#include "gpcd/errors.hpp"
#include "gpcd/features.hpp"
#include "gpcd/rng.hpp"
#include "gpcd/sim/scenario.hpp"
#include "oracles.hpp"

using namespace gpcd;
using Eigen::VectorXd;

namespace {

JointSample sample_123() {
  JointSample s = JointSample::zero(2);
  s.q = Eigen::Vector2d(1, 2);
  s.dq = Eigen::Vector2d(3, 4);
  s.ddq = Eigen::Vector2d(5, 6);
  s.q_ref = Eigen::Vector2d(1.5, 2);
  s.dq_ref = Eigen::Vector2d(3, 3);
  s.e_q = s.q_ref - s.q;
  s.de_q = s.dq_ref - s.dq;
  s.i_cmd = Eigen::Vector2d(0.1, -0.2);
  s.i_meas = s.i_cmd;
  return s;
}

}  // namespace

TEST_CASE("standard features") {
  CHECK(standard_features(JointSample::zero(2)) == VectorXd::Zero(6));
  VectorXd expect(6);
  expect << 1, 2, 3, 4, 5, 6;
  CHECK(standard_features(sample_123()) == expect);
}

TEST_CASE("augmented features extend the standard ones") {
  const JointSample s = sample_123();
  const VectorXd a = augmented_features(s);
  REQUIRE(a.size() == 12);
  CHECK(a.head(6) == standard_features(s));
  CHECK(a.segment(6, 2) == s.e_q);
  CHECK(a.segment(8, 2) == s.de_q);
  CHECK(a.segment(10, 2) == s.i_cmd);
  CHECK(augmented_features(JointSample::zero(2)) == VectorXd::Zero(12));

  JointSample t = s;
  t.q_ref = t.q;
  t.dq_ref = t.dq;
  t.e_q.setZero();
  t.de_q.setZero();
  CHECK(augmented_features(t).segment(6, 4) == VectorXd::Zero(4));
}

TEST_CASE("feature matrices stack rows") {
  std::vector<JointSample> v{sample_123(), JointSample::zero(2)};
  const auto S = standard_feature_matrix(v);
  const auto A = augmented_feature_matrix(v);
  CHECK(S.rows() == 2);
  CHECK(A.cols() == 12);
  CHECK(S.row(0).transpose() == standard_features(v[0]));
  CHECK(A.leftCols(6) == S);
}

TEST_CASE("friction columns and the velocity gate") {
  const auto kin = sim::DynamicParams::planar2r_default().kinematics();
  JointSample s = JointSample::zero(2);
  s.dq[0] = 0.5;
  auto r = regressor_row(kin, s, 0, true, 1e-2);
  CHECK(r.friction(0) == 1.0);
  CHECK(r.friction(1) == 0.5);
  s.dq[0] = 0.005;
  r = regressor_row(kin, s, 0, true, 1e-2);
  CHECK(r.friction(0) == 0.0);
  CHECK(r.friction(1) == 0.0);
  r = regressor_row(kin, s, 0, false, 1e-2);
  CHECK(r.friction(0) == 1.0);
  CHECK(r.friction(1) == 0.005);
  s.dq[0] = -0.005;
  CHECK(regressor_row(kin, s, 0, false, 1e-2).friction(0) == -1.0);
  s.dq[0] = 0.0;
  CHECK(regressor_row(kin, s, 0, false, 1e-2).friction == Eigen::RowVector2d::Zero());
  CHECK_THROWS_AS(regressor_row(kin, s, 2, false), DimensionError);
  CHECK(regressor_row(kin, s, 0, false).full().size() == 7);
}

TEST_CASE("gating is idempotent") {
  Rng rng(1);
  const auto kin = sim::DynamicParams::planar2r_default().kinematics();
  for (int k = 0; k < 100; ++k) {
    JointSample s = JointSample::zero(2);
    s.q = Eigen::Vector2d(rng.uniform(-3, 3), rng.uniform(-3, 3));
    s.dq = Eigen::Vector2d(rng.uniform(-0.03, 0.03), rng.uniform(-1, 1));
    const auto once = regressor_row(kin, s, 0, true);
    const auto twice = gate_row(once, s.dq[0], kDefaultVelocityThreshold);
    CHECK(once.full() == twice.full());
    CHECK(once.dynamic == regressor_row(kin, s, 0, false).dynamic);
  }
}

TEST_CASE("regressor rows reproduce the closed-form torque") {
  auto p = sim::DynamicParams::planar2r_default();
  const auto kin = p.kinematics();
  const VectorXd w = oracle::minimal_params_2r(p);
  Rng rng(9);
  for (int k = 0; k < 300; ++k) {
    JointSample s = JointSample::zero(2);
    s.q = Eigen::Vector2d(rng.uniform(-3, 3), rng.uniform(-3, 3));
    s.dq = Eigen::Vector2d(rng.uniform(-2, 2), rng.uniform(-2, 2));
    s.ddq = Eigen::Vector2d(rng.uniform(-4, 4), rng.uniform(-4, 4));
    const VectorXd tau = oracle::inverse_dynamics_2r(p, s.q, s.dq, s.ddq);
    for (int j = 0; j < 2; ++j) {
      CHECK(std::abs(regressor_row(kin, s, j, false).dynamic.dot(w) - tau[j]) < 1e-10);
    }
  }
}

TEST_CASE("quasi-static split uses a strict inequality") {
  JointSample s = JointSample::zero(2);
  s.dq[1] = 1e-2;
  CHECK(is_quasi_static(s, 0));
  CHECK_FALSE(is_quasi_static(s, 1, 1e-2));
}

TEST_CASE("scaler standardizes with population statistics") {
  Eigen::MatrixXd X(4, 2);
  X << 1, 5, 2, 5, 3, 5, 4, 5;
  const Scaler sc = Scaler::fit(X);
  CHECK(sc.mean[0] == doctest::Approx(2.5));
  CHECK(sc.scale[0] == doctest::Approx(std::sqrt(1.25)));
  CHECK(sc.scale[1] == 1.0);
  const auto Z = sc.transform(X);
  CHECK(Z.col(0).mean() == doctest::Approx(0.0));
  CHECK(Z.col(1).cwiseAbs().maxCoeff() == 0.0);
  CHECK(Scaler::identity(3).transform(Eigen::MatrixXd::Ones(2, 3)) == Eigen::MatrixXd::Ones(2, 3));
}

TEST_CASE("logged errors equal reference minus state") {
  const auto plant = sim::Plant::planar2r_default();
  const auto d = sim::generate_dataset(plant, {}, sim::random_waypoints_scenario(2), 3);
  const auto A = augmented_feature_matrix(d[0].samples);
  for (std::size_t k = 0; k < d[0].samples.size(); ++k) {
    const auto& s = d[0].samples[k];
    const auto r = static_cast<Eigen::Index>(k);
    CHECK((A.row(r).segment(6, 2).transpose() - (s.q_ref - s.q)).cwiseAbs().maxCoeff() == 0.0);
  }
}
