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
#include "gpcd/kernels.hpp"
#include "gpcd/rng.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace gpcd;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using doctest::Approx;

using testgen::random_inputs;
using testgen::random_spec;

TEST_CASE("gate values") {
  const GateSpec g{0, 1e-2, 2};
  VectorXd x = VectorXd::Zero(6);
  CHECK(gate(x, g) == 1.0);
  x[2] = 0.005;
  CHECK(gate(x, g) == 1.0);
  x[2] = 0.02;
  CHECK(gate(x, g) == 0.0);
  x[2] = -0.01;
  CHECK(gate(x, g) == 0.0);
  CHECK_THROWS_AS(gate(VectorXd::Zero(2), g), DimensionError);
}

TEST_CASE("RBF closed form and basic identities") {
  const VectorXd a = VectorXd::Zero(3);
  VectorXd b = a;
  b[1] = 1.0;
  const auto k = make_rbf(1.0, VectorXd::Ones(1), {1});
  CHECK(eval(k, a, a) == 1.0);
  CHECK(eval(k, a, b) == Approx(0.6065306597126334));
  const auto k2 = make_rbf(2.5, Eigen::Vector2d(0.5, 2.0), {0, 2});
  CHECK(eval(k2, a, a) == 2.5);
  CHECK(eval(k2, a, b) == 2.5);  // dimension 1 is masked out
  CHECK(gram(k2, a.transpose()).rows() == 1);
  CHECK(gram(k2, a.transpose())(0, 0) == 2.5);
}

TEST_CASE("input scaling divides the distance") {
  VectorXd a = VectorXd::Zero(2), b = VectorXd::Zero(2);
  b[0] = 2.0;
  const auto k = make_rbf(1.0, VectorXd::Ones(1), {0}, VectorXd::Constant(2, 2.0));
  CHECK(eval(k, a, b) == Approx(std::exp(-0.5)));
}

TEST_CASE("gated rescale zeroes mismatched pairs") {
  VectorXd rest = VectorXd::Zero(6), moving = VectorXd::Zero(6);
  moving[2] = 1.0;
  const auto k = make_gated(make_rbf(3.0, VectorXd::Ones(6), {0, 1, 2, 3, 4, 5}), {0, 1e-2, 2});
  CHECK(eval(k, rest, moving) == 0.0);
  CHECK(eval(k, moving, moving) == 0.0);
  CHECK(eval(k, rest, rest) == 3.0);
}

TEST_CASE("linear kernel equals phi W phi^T") {
  const auto kin = sim::DynamicParams::planar2r_default().kinematics();
  Rng rng(4);
  MatrixXd B(7, 7);
  for (auto& b : B.reshaped()) b = rng.normal();
  const MatrixXd W = B * B.transpose();
  const auto k = make_linear(kin, 1, W, true, false);
  const MatrixXd X = random_inputs(rng, 5);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      JointSample si = JointSample::zero(2), sj = JointSample::zero(2);
      si.q = X.row(i).segment(0, 2).transpose();
      si.dq = X.row(i).segment(2, 2).transpose();
      si.ddq = X.row(i).segment(4, 2).transpose();
      sj.q = X.row(j).segment(0, 2).transpose();
      sj.dq = X.row(j).segment(2, 2).transpose();
      sj.ddq = X.row(j).segment(4, 2).transpose();
      const auto pi = regressor_row(kin, si, 1, false).full();
      const auto pj = regressor_row(kin, sj, 1, false).full();
      const double expect = (pi * W * pj.transpose())(0, 0);
      CHECK(eval(k, X.row(i).transpose(), X.row(j).transpose()) ==
            Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("Gram matrices of random specs are PSD and symmetric") {
  Rng rng(2024);
  for (int t = 0; t < 100; ++t) {
    const KernelSpec k = random_spec(rng, 0);
    const MatrixXd X = random_inputs(rng, 30);
    const MatrixXd K = gram(k, X);
    CHECK((K - K.transpose()).cwiseAbs().maxCoeff() == 0.0);
    const double tr = K.trace();
    const double lo = Eigen::SelfAdjointEigenSolver<MatrixXd>(K).eigenvalues().minCoeff();
    CHECK(lo >= -1e-8 * std::max(tr, 1e-300));
    CHECK((gram(k, X, X) - K).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, tr));
    CHECK((gram_diagonal(k, X) - K.diagonal()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, tr));
  }
}

TEST_CASE("sum Gram is the elementwise sum") {
  Rng rng(5);
  const MatrixXd X = random_inputs(rng, 12);
  const auto a = make_rbf(1.3, VectorXd::Constant(3, 0.7), {0, 4, 9});
  const auto b = make_rbf(0.4, VectorXd::Constant(2, 1.7), {1, 2});
  CHECK((gram(make_sum({a, b}), X) - (gram(a, X) + gram(b, X))).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("gated rescale factorization is exact") {
  Rng rng(6);
  for (int t = 0; t < 20; ++t) {
    const KernelSpec inner = random_spec(rng, 1);
    const GateSpec g{t % 2, 1e-2, 2 + t % 2};
    const MatrixXd X = random_inputs(rng, 25);
    const VectorXd d = gate_values(X, g);
    const MatrixXd expect = d.asDiagonal() * gram(inner, X) * d.asDiagonal();
    CHECK((gram(make_gated(inner, g), X) - expect).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("composite kernel reduces to the kinetic term on dynamical inputs") {
  Rng rng(8);
  for (int j = 0; j < 2; ++j) {
    const KernelSpec spec = initial_kernel(Variant::kGatedSemiParametric, 2, j, 0.7);
    MatrixXd X = random_inputs(rng, 40);
    for (int i = 0; i < 40; ++i) X(i, 2 + j) = (i % 2 ? 1.0 : -1.0) * rng.uniform(0.02, 1.0);
    const auto& sum = std::get<SumKernel>(spec.node);
    REQUIRE(sum.terms.size() == 2);
    const auto& kin = std::get<RbfKernel>(sum.terms[1].node);
    std::vector<int> std_dims{0, 1, 2, 3, 4, 5};
    CHECK(kin.dims == std_dims);
    const auto alone = make_rbf(kin.variance, kin.length_scales, kin.dims, kin.input_scale);
    CHECK((gram(spec, X) - gram(alone, X)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("hyperparameters round-trip in log space") {
  Rng rng(10);
  for (int t = 0; t < 20; ++t) {
    const KernelSpec k = random_spec(rng, 0);
    const VectorXd p = get_params(k);
    CHECK(p.size() == num_params(k));
    CHECK(static_cast<int>(param_names(k).size()) == num_params(k));
    VectorXd p2 = p.array() + 0.25;
    if (p.size() > 0) {
      CHECK((get_params(set_params(k, p2)) - p2).cwiseAbs().maxCoeff() < 1e-12);
    }
    const KernelSpec back = kernel_from_json(kernel_to_json(k));
    const MatrixXd X = random_inputs(rng, 6);
    CHECK((gram(back, X) - gram(k, X)).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK_THROWS(set_params(make_rbf(1, VectorXd::Ones(2), {0, 1}), VectorXd::Zero(2)));
}

TEST_CASE("gradient contraction matches finite differences of the Gram") {
  Rng rng(12);
  for (int t = 0; t < 10; ++t) {
    const KernelSpec k = random_spec(rng, 0);
    if (num_params(k) == 0) continue;
    const MatrixXd X = random_inputs(rng, 8);
    MatrixXd W(8, 8);
    for (auto& w : W.reshaped()) w = rng.normal();
    W = (W + W.transpose()).eval();
    const VectorXd g = contract_gradient(k, X, W);
    const VectorXd p = get_params(k);
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double h = 1e-6;
      VectorXd a = p, b = p;
      a[i] += h;
      b[i] -= h;
      const double fd =
          ((W.array() * (gram(set_params(k, a), X) - gram(set_params(k, b), X)).array()).sum()) /
          (2 * h);
      CHECK(g[i] == Approx(fd).epsilon(1e-5).scale(1e-6));
    }
  }
}

TEST_CASE("validation rejects bad specs") {
  CHECK_THROWS_AS(validate(make_rbf(1.0, VectorXd::Ones(1), {7}), 6), DimensionError);
  CHECK_THROWS_AS(validate(make_gated(make_rbf(1.0, VectorXd::Ones(1), {0}), {0, 1e-2, 9}), 6),
                  DimensionError);
  CHECK_THROWS(validate(make_rbf(-1.0, VectorXd::Ones(1), {0}), 6));
  CHECK(required_input_dim(make_rbf(1.0, VectorXd::Ones(1), {4})) == 5);
}
