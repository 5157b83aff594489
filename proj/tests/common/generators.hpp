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

#ifndef GPCD_TESTS_GENERATORS_HPP_
#define GPCD_TESTS_GENERATORS_HPP_

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "gpcd/kernels.hpp"
#include "gpcd/rng.hpp"
#include "gpcd/sim/arm.hpp"

namespace testgen {

/// Random 12-dimensional inputs (two-joint augmented layout); about half of
/// the rows have joint speeds inside the gate.
inline Eigen::MatrixXd random_inputs(gpcd::Rng& rng, int n) {
  Eigen::MatrixXd X(n, 12);
  for (int i = 0; i < n; ++i) {
    for (int d = 0; d < 12; ++d) X(i, d) = rng.uniform(-1.5, 1.5);
    for (int j = 0; j < 2; ++j) {
      if (rng.uniform() < 0.5) X(i, 2 + j) = rng.uniform(-5e-3, 5e-3);
    }
  }
  return X;
}

/// Random kernel tree over the 12-dimensional layout, at most three levels deep.
inline gpcd::KernelSpec random_spec(gpcd::Rng& rng, int depth) {
  using namespace gpcd;
  const auto kin = sim::DynamicParams::planar2r_default().kinematics();
  const int pick = depth >= 2 ? static_cast<int>(rng.index(2)) : static_cast<int>(rng.index(4));
  if (pick == 0) {
    std::vector<int> dims;
    for (int d = 0; d < 12; ++d) {
      if (rng.uniform() < 0.5) dims.push_back(d);
    }
    if (dims.empty()) dims.push_back(static_cast<int>(rng.index(12)));
    Eigen::VectorXd ls(static_cast<Eigen::Index>(dims.size()));
    for (auto& l : ls) l = std::exp(rng.uniform(-1.5, 1.5));
    return make_rbf(std::exp(rng.uniform(-2, 2)), ls, dims);
  }
  if (pick == 1) {
    const int j = static_cast<int>(rng.index(2));
    const bool fr = rng.uniform() < 0.5;
    const int m = 5 + (fr ? 2 : 0);
    Eigen::MatrixXd B(m, m);
    for (auto& b : B.reshaped()) b = rng.normal();
    return make_linear(kin, j, B * B.transpose(), fr, rng.uniform() < 0.5);
  }
  if (pick == 2) {
    std::vector<KernelSpec> terms;
    const int k = 2 + static_cast<int>(rng.index(2));
    for (int t = 0; t < k; ++t) terms.push_back(random_spec(rng, depth + 1));
    return make_sum(std::move(terms));
  }
  const int j = static_cast<int>(rng.index(2));
  return make_gated(random_spec(rng, depth + 1), GateSpec{j, 1e-2, 2 + j});
}

}  // namespace testgen

#endif  // GPCD_TESTS_GENERATORS_HPP_
