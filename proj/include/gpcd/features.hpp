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

#ifndef GPCD_FEATURES_HPP_
#define GPCD_FEATURES_HPP_

#include <Eigen/Dense>
#include <span>

#include "gpcd/sim/arm.hpp"
#include "gpcd/sim/simulator.hpp"

namespace gpcd {

using sim::JointSample;

/// Default velocity threshold separating quasi-static from dynamical states.
inline constexpr double kDefaultVelocityThreshold = 1e-2;

/// x = [q, dq, ddq], 3n entries.
Eigen::VectorXd standard_features(const JointSample& s);

/// x^a = [q, dq, ddq, e_q, de_q, i_c], 6n entries. The first 3n entries are
/// the standard features.
Eigen::VectorXd augmented_features(const JointSample& s);

/// Row-per-sample feature matrices.
Eigen::MatrixXd standard_feature_matrix(std::span<const JointSample> samples);
Eigen::MatrixXd augmented_feature_matrix(std::span<const JointSample> samples);

/// Offset of dq_joint inside either feature layout.
inline int velocity_index(int dof, int joint) { return dof + joint; }

/// True when |dq_joint| < threshold.
bool is_quasi_static(const JointSample& s, int joint,
                     double threshold = kDefaultVelocityThreshold);

/// Linear-model row for one joint: [phi^d, phi^f] with phi^f = [sign(dq), dq].
struct RegressorRow {
  Eigen::RowVectorXd dynamic;
  Eigen::RowVector2d friction;

  Eigen::RowVectorXd full() const;
};

/// With `gated`, the friction columns are zeroed in quasi-static states.
RegressorRow regressor_row(const sim::Kinematics& kin, const JointSample& s,
                           int joint, bool gated,
                           double threshold = kDefaultVelocityThreshold);

/// Zero the friction part of a row when |dq| < threshold. Idempotent.
RegressorRow gate_row(RegressorRow row, double velocity, double threshold);

/// Per-dimension standardization statistics of a training set.
struct Scaler {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;  ///< standard deviation; 1 where a column is constant

  static Scaler fit(const Eigen::MatrixXd& X);
  static Scaler identity(int dim);
  Eigen::MatrixXd transform(const Eigen::MatrixXd& X) const;
  int dim() const { return static_cast<int>(mean.size()); }
};

}  // namespace gpcd

#endif  // GPCD_FEATURES_HPP_
