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

#ifndef GPCD_ESTIMATORS_HPP_
#define GPCD_ESTIMATORS_HPP_

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gpcd/features.hpp"
#include "gpcd/gpr.hpp"
#include "gpcd/kernels.hpp"
#include "gpcd/sim/plant.hpp"

namespace gpcd {

/// The three per-joint current estimators.
///  - kParametric (P_f): rigid-body plus kinetic/viscous friction regressor.
///  - kStandardSemiParametric (SP_S): P_f mean plus an RBF on [q, dq, ddq].
///  - kGatedSemiParametric (SP_P): friction-nulled mean plus a gated RBF on
///    the augmented input and an RBF on the standard input.
enum class Variant { kParametric, kStandardSemiParametric, kGatedSemiParametric };

std::string variant_name(Variant v);
Variant parse_variant(const std::string& name);
inline constexpr Variant kAllVariants[] = {Variant::kParametric,
                                           Variant::kStandardSemiParametric,
                                           Variant::kGatedSemiParametric};

/// Rotor terms of one joint, taken as known from the motor datasheet.
struct JointMotor {
  double reflected_inertia = 0.0;  ///< K_r^2 J_m
  double damping = 0.0;            ///< K_r^2 B_m
  double current_gain = 1.0;       ///< K_tau K_r

  static JointMotor from(const sim::MotorParams& motor, int joint);
};

/// Linear model of one joint's current. `weights` spans every column
/// [w_d, F_k, F_v]; columns that are identically zero for this joint are
/// inactive and keep weight 0.
struct ParametricModel {
  sim::Kinematics kinematics;
  int joint = 0;
  JointMotor motor;
  bool friction = true;
  double threshold = kDefaultVelocityThreshold;
  Eigen::VectorXd weights;
  std::vector<bool> active;
  double condition = 0.0;  ///< of the column-equilibrated design matrix
  bool ridge = false;

  Eigen::RowVectorXd row(const JointSample& s, bool gated) const;
  /// Load torque phi . w.
  double torque(const JointSample& s, bool gated) const;
  /// Current that produces the load torque plus the rotor terms.
  double current(const JointSample& s, bool gated) const;
};

struct ParametricOptions {
  bool friction = true;
  /// Regress only on samples with |dq_joint| >= threshold, where the
  /// kinetic friction model applies.
  bool dynamical_only = true;
  double threshold = kDefaultVelocityThreshold;
};

/// Least squares of the measured load torque on the regressor rows.
/// Condition <= 1e8: plain least squares; <= 1e12: ridge with 1e-8 * trace;
/// beyond that RankDeficientError.
ParametricModel fit_parametric(std::span<const JointSample> samples,
                               const sim::Kinematics& kin, const sim::MotorParams& motor,
                               int joint, const ParametricOptions& opts = {});

struct Estimator {
  Variant variant = Variant::kParametric;
  int joint = 0;
  double threshold = kDefaultVelocityThreshold;
  ParametricModel parametric;
  Scaler scaler;            ///< statistics of the GP training inputs
  std::optional<GPModel> gp;

  int dof() const { return parametric.kinematics.dof(); }
  bool gated_mean() const { return variant == Variant::kGatedSemiParametric; }
};

struct BuildOptions {
  OptimizerConfig optimizer;
  std::size_t subset_size = 2000;
  std::uint64_t subset_seed = 0;
  double threshold = kDefaultVelocityThreshold;
  bool standardize = true;
  ParametricOptions parametric;
  /// Reuse an already fitted mean instead of calling fit_parametric.
  std::optional<ParametricModel> mean;
  /// Skip hyperparameter optimization and fit with the initial guess.
  bool skip_optimization = false;
};

struct BuildResult {
  Estimator estimator;
  std::optional<OptimizeResult> optimization;
  std::vector<std::size_t> subset;
};

/// Combined gate pattern of every joint: bit j set when joint j is quasi-static.
std::vector<int> gate_classes(std::span<const JointSample> samples,
                              double threshold = kDefaultVelocityThreshold);

/// Initial GP kernel of a variant before hyperparameter optimization.
KernelSpec initial_kernel(Variant v, int dof, int joint, double signal_variance,
                          double threshold = kDefaultVelocityThreshold);

/// GP input matrix of a variant: standard features for SP_S, augmented for SP_P.
Eigen::MatrixXd estimator_inputs(Variant v, std::span<const JointSample> samples);

/// Train one joint's estimator. Throws CoverageError when SP_P lacks either
/// gate class.
BuildResult build(Variant variant, std::span<const JointSample> train,
                  const sim::Kinematics& kin, const sim::MotorParams& motor, int joint,
                  const BuildOptions& opts = {});

/// Predicted current (and latent variance for GP variants when requested).
Prediction predict_current(const Estimator& est, std::span<const JointSample> samples,
                           bool with_variance = false);

/// Mean squared error over the population variance of `reference`.
double nmse(const Eigen::VectorXd& targets, const Eigen::VectorXd& predictions,
            const Eigen::VectorXd& reference);
inline double nmse(const Eigen::VectorXd& targets, const Eigen::VectorXd& predictions) {
  return nmse(targets, predictions, targets);
}

}  // namespace gpcd

#endif  // GPCD_ESTIMATORS_HPP_
