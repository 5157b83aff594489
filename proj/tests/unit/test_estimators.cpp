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

#include "gpcd/errors.hpp"
#include "gpcd/estimators.hpp"
#include "gpcd/sim/scenario.hpp"
#include "oracles.hpp"

using namespace gpcd;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using doctest::Approx;

namespace {

std::vector<JointSample> noiseless(const sim::Plant& plant, int waypoints, std::uint64_t seed) {
  sim::SimConfig cfg;
  cfg.current_noise_std = 0.0;
  return sim::generate_dataset(plant, cfg, sim::random_waypoints_scenario(waypoints), seed)[0]
      .samples;
}

std::vector<JointSample> noisy(int waypoints, std::uint64_t seed) {
  return sim::generate_dataset(sim::Plant::planar2r_default(), {},
                               sim::random_waypoints_scenario(waypoints), seed)[0]
      .samples;
}

BuildOptions quick_options() {
  BuildOptions o;
  o.subset_size = 500;
  o.optimizer.iterations = 30;
  o.optimizer.batch_size = 256;
  o.optimizer.seed = 2;
  o.subset_seed = 3;
  return o;
}

}  // namespace

TEST_CASE("frictionless noiseless data recovers the minimal parameters") {
  sim::Plant plant = sim::Plant::planar2r_default();
  plant.friction = sim::FrictionParams::none(2);
  const auto data = noiseless(plant, 12, 31);
  const VectorXd truth = oracle::minimal_params_2r(plant.arm);
  ParametricOptions o;
  o.friction = false;
  for (int j = 0; j < 2; ++j) {
    const auto m = fit_parametric(data, plant.arm.kinematics(), plant.motor, j, o);
    REQUIRE(m.weights.size() == 5);
    for (int k = 0; k < 5; ++k) {
      if (!m.active[k]) {
        CHECK(m.weights[k] == 0.0);
        continue;
      }
      CHECK(std::abs(m.weights[k] - truth[k]) <= 1e-6 * std::abs(truth[k]));
    }
  }
}

TEST_CASE("kinetic friction coefficients are recovered") {
  const sim::Plant plant = sim::Plant::planar2r_default();
  const auto data = noiseless(plant, 12, 32);
  for (int j = 0; j < 2; ++j) {
    const auto m = fit_parametric(data, plant.arm.kinematics(), plant.motor, j);
    REQUIRE(m.weights.size() == 7);
    CHECK(std::abs(m.weights[5] - 0.4) <= 1e-3);
    CHECK(std::abs(m.weights[6] - 0.3) <= 1e-3);
    CHECK_FALSE(m.ridge);
  }
}

TEST_CASE("identical states are rank deficient") {
  const sim::Plant plant = sim::Plant::planar2r_default();
  JointSample s = JointSample::zero(2);
  s.q = Eigen::Vector2d(0.3, 0.2);
  s.dq = Eigen::Vector2d(0.5, 0.4);
  s.i_meas = Eigen::Vector2d(0.2, 0.1);
  const std::vector<JointSample> same(50, s);
  CHECK_THROWS_AS(fit_parametric(same, plant.arm.kinematics(), plant.motor, 0), RankDeficientError);
}

TEST_CASE("parametric prediction is the regressor product") {
  const sim::Plant plant = sim::Plant::planar2r_default();
  const auto data = noisy(6, 33);
  const auto r = build(Variant::kParametric, data, plant.arm.kinematics(), plant.motor, 1);
  CHECK_FALSE(r.estimator.gp.has_value());
  const auto p = predict_current(r.estimator, data);
  const auto& pm = r.estimator.parametric;
  for (std::size_t k = 0; k < data.size(); k += 97) {
    const auto& s = data[k];
    const double tau = pm.row(s, false).dot(pm.weights);
    CHECK(p.mean[static_cast<Eigen::Index>(k)] ==
          Approx((tau + pm.motor.reflected_inertia * s.ddq[1] + pm.motor.damping * s.dq[1]) /
                 pm.motor.current_gain));
  }
}

TEST_CASE("parametric estimate vanishes at the zero state without gravity") {
  sim::Plant plant = sim::Plant::planar2r_default();
  plant.arm.gravity = 0.0;
  const auto data = noisy(6, 34);
  auto r = build(Variant::kParametric, data, plant.arm.kinematics(), plant.motor, 0);
  r.estimator.parametric.kinematics.gravity = 0.0;
  const std::vector<JointSample> zero{JointSample::zero(2)};
  CHECK(predict_current(r.estimator, zero).mean[0] == 0.0);
}

TEST_CASE("frictionless noiseless parametric nMSE is negligible") {
  sim::Plant plant = sim::Plant::planar2r_default();
  plant.friction = sim::FrictionParams::none(2);
  const auto train = noiseless(plant, 10, 35), test = noiseless(plant, 4, 36);
  BuildOptions o;
  o.parametric.friction = false;
  for (int j = 0; j < 2; ++j) {
    const auto r = build(Variant::kParametric, train, plant.arm.kinematics(), plant.motor, j, o);
    VectorXd y(static_cast<Eigen::Index>(test.size()));
    for (std::size_t k = 0; k < test.size(); ++k) y[static_cast<Eigen::Index>(k)] = test[k].i_meas[j];
    CHECK(nmse(y, predict_current(r.estimator, test).mean) < 1e-6);
  }
}

TEST_CASE("gated variant needs both gate classes") {
  const sim::Plant plant = sim::Plant::planar2r_default();
  std::vector<JointSample> moving;
  for (const auto& s : noisy(8, 37)) {
    if (!is_quasi_static(s, 0)) moving.push_back(s);
  }
  CHECK_THROWS_AS(build(Variant::kGatedSemiParametric, moving, plant.arm.kinematics(), plant.motor,
                        0, quick_options()),
                  CoverageError);
}

TEST_CASE("semi-parametric variants on shared data") {
  const sim::Plant plant = sim::Plant::planar2r_default();
  const auto kin = plant.arm.kinematics();
  const auto train = noisy(10, 38), test = noisy(3, 39);
  const int j = 1;
  auto o = quick_options();
  o.mean = fit_parametric(train, kin, plant.motor, j);
  const auto S = build(Variant::kStandardSemiParametric, train, kin, plant.motor, j, o);
  const auto G = build(Variant::kGatedSemiParametric, train, kin, plant.motor, j, o);
  REQUIRE(S.estimator.gp.has_value());
  REQUIRE(G.estimator.gp.has_value());
  CHECK(S.subset == G.subset);
  CHECK(S.estimator.gp->input_dim() == 6);
  CHECK(G.estimator.gp->input_dim() == 12);
  CHECK(S.optimization->best_loss <= S.optimization->initial_loss);
  CHECK(G.optimization->best_loss <= G.optimization->initial_loss);

  SUBCASE("dynamical predictions agree within two predictive standard deviations") {
    const auto ps = predict_current(S.estimator, test, true);
    const auto pg = predict_current(G.estimator, test, true);
    std::size_t checked = 0, outside = 0;
    for (std::size_t k = 0; k < test.size(); ++k) {
      if (is_quasi_static(test[k], j)) continue;
      const auto r = static_cast<Eigen::Index>(k);
      const double sd = std::sqrt(ps.variance[r] + S.estimator.gp->noise_variance);
      ++checked;
      if (std::abs(ps.mean[r] - pg.mean[r]) > 2.0 * sd) ++outside;
    }
    MESSAGE(outside << " of " << checked << " dynamical points outside 2 sd");
    CHECK(checked > 0);
    CHECK(outside == 0);
  }

  SUBCASE("gated term vanishes between dynamical and any inputs") {
    const auto& sum = std::get<SumKernel>(G.estimator.gp->kernel.node);
    std::vector<JointSample> dyn;
    for (const auto& s : test) {
      if (!is_quasi_static(s, j)) dyn.push_back(s);
    }
    const MatrixXd Xd = estimator_inputs(Variant::kGatedSemiParametric, dyn);
    CHECK(gram(sum.terms[0], Xd, G.estimator.gp->X).cwiseAbs().maxCoeff() == 0.0);
    std::vector<JointSample> rest;
    for (const auto& s : test) {
      if (is_quasi_static(s, j)) rest.push_back(s);
    }
    REQUIRE_FALSE(rest.empty());
    const MatrixXd Xr = estimator_inputs(Variant::kGatedSemiParametric, rest);
    CHECK(gram_diagonal(sum.terms[0], Xr).minCoeff() > 0.0);
  }

  SUBCASE("interpolates training points when the noise is negligible") {
    // Consecutive samples are near duplicates with independent noise, so refit
    // on a sparse slice of the subset.
    Estimator e = G.estimator;
    const auto& gp = *e.gp;
    const Eigen::Index stride = gp.X.rows() / 50;
    REQUIRE(stride >= 1);
    std::vector<JointSample> pts;
    MatrixXd Xs(50, gp.X.cols());
    VectorXd ys(50), ms(50);
    for (Eigen::Index k = 0; k < 50; ++k) {
      Xs.row(k) = gp.X.row(k * stride);
      ys[k] = gp.y[k * stride];
      ms[k] = gp.prior_mean[k * stride];
      pts.push_back(train[G.subset[static_cast<std::size_t>(k * stride)]]);
    }
    e.gp = fit(Xs, ys, ms, gp.kernel, 1e-8);
    CHECK(e.gp->jitter == 0.0);
    const auto p = predict_current(e, pts);
    for (std::size_t k = 0; k < pts.size(); ++k) {
      CHECK(std::abs(p.mean[static_cast<Eigen::Index>(k)] - pts[k].i_meas[j]) < 1e-3);
    }
  }
}

TEST_CASE("estimators ignore other joints' targets") {
  const sim::Plant plant = sim::Plant::planar2r_default();
  auto a = noisy(6, 40);
  auto b = a;
  for (auto& s : b) s.i_meas[1] = -3.0 * s.i_meas[1] + 0.7;
  auto o = quick_options();
  o.skip_optimization = true;
  for (Variant v : {Variant::kParametric, Variant::kGatedSemiParametric}) {
    const auto ea = build(v, a, plant.arm.kinematics(), plant.motor, 0, o).estimator;
    const auto eb = build(v, b, plant.arm.kinematics(), plant.motor, 0, o).estimator;
    CHECK(ea.parametric.weights == eb.parametric.weights);
    if (ea.gp) CHECK(ea.gp->alpha == eb.gp->alpha);
  }
}

TEST_CASE("normalized mean squared error") {
  const VectorXd y = (VectorXd(5) << 1, 2, 3, 5, 8).finished();
  CHECK(nmse(y, y) == 0.0);
  CHECK(nmse(y, VectorXd::Constant(5, y.mean())) == Approx(1.0));
  const VectorXd p = (VectorXd(5) << 1.5, 2, 2, 5, 9).finished();
  CHECK(nmse(-2.5 * y, -2.5 * p, -2.5 * y) == Approx(nmse(y, p, y)));
  CHECK_THROWS_AS(nmse(y, p, VectorXd::Constant(3, 1.0)), std::domain_error);
  CHECK_THROWS(nmse(y, VectorXd::Zero(4)));
}

TEST_CASE("variant names") {
  CHECK(variant_name(Variant::kParametric) == "P_f");
  CHECK(parse_variant("SP_P") == Variant::kGatedSemiParametric);
  CHECK_THROWS(parse_variant("GP"));
}
