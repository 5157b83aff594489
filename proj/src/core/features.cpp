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

#include "gpcd/features.hpp"

#include <cmath>
#include <string>

#include "gpcd/errors.hpp"
#include "gpcd/sim/plant.hpp"

namespace gpcd {

using Eigen::MatrixXd;
using Eigen::VectorXd;

VectorXd standard_features(const JointSample& s) {
  const int n = s.dof();
  VectorXd x(3 * n);
  x << s.q, s.dq, s.ddq;
  return x;
}

VectorXd augmented_features(const JointSample& s) {
  const int n = s.dof();
  VectorXd x(6 * n);
  x << s.q, s.dq, s.ddq, s.e_q, s.de_q, s.i_cmd;
  return x;
}

MatrixXd standard_feature_matrix(std::span<const JointSample> samples) {
  if (samples.empty()) return MatrixXd();
  MatrixXd X(samples.size(), 3 * samples.front().dof());
  for (std::size_t k = 0; k < samples.size(); ++k) X.row(k) = standard_features(samples[k]);
  return X;
}

MatrixXd augmented_feature_matrix(std::span<const JointSample> samples) {
  if (samples.empty()) return MatrixXd();
  MatrixXd X(samples.size(), 6 * samples.front().dof());
  for (std::size_t k = 0; k < samples.size(); ++k) X.row(k) = augmented_features(samples[k]);
  return X;
}

bool is_quasi_static(const JointSample& s, int joint, double threshold) {
  if (joint < 0 || joint >= s.dof()) {
    throw DimensionError("joint index " + std::to_string(joint) + " out of range");
  }
  return std::abs(s.dq[joint]) < threshold;
}

Eigen::RowVectorXd RegressorRow::full() const {
  Eigen::RowVectorXd r(dynamic.size() + 2);
  r << dynamic, friction;
  return r;
}

RegressorRow gate_row(RegressorRow row, double velocity, double threshold) {
  if (std::abs(velocity) < threshold) row.friction.setZero();
  return row;
}

RegressorRow regressor_row(const sim::Kinematics& kin, const JointSample& s,
                           int joint, bool gated, double threshold) {
  if (joint < 0 || joint >= kin.dof()) {
    throw DimensionError("joint index " + std::to_string(joint) + " out of range");
  }
  RegressorRow row;
  row.dynamic = sim::regressor_row(kin, joint, s.q, s.dq, s.ddq);
  const double v = s.dq[joint];
  row.friction << sim::signum(v), v;
  return gated ? gate_row(std::move(row), v, threshold) : row;
}

Scaler Scaler::fit(const MatrixXd& X) {
  Scaler sc;
  const auto N = static_cast<double>(X.rows());
  sc.mean = X.colwise().mean().transpose();
  sc.scale.resize(X.cols());
  for (Eigen::Index d = 0; d < X.cols(); ++d) {
    const double var = N > 0 ? (X.col(d).array() - sc.mean[d]).square().sum() / N : 0.0;
    const double sd = std::sqrt(var);
    sc.scale[d] = sd > 1e-12 ? sd : 1.0;
  }
  return sc;
}

Scaler Scaler::identity(int dim) {
  return {VectorXd::Zero(dim), VectorXd::Ones(dim)};
}

MatrixXd Scaler::transform(const MatrixXd& X) const {
  if (X.cols() != mean.size()) throw DimensionError("scaler dimension mismatch");
  return (X.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

}  // namespace gpcd
