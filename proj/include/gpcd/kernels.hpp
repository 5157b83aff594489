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

#ifndef GPCD_KERNELS_HPP_
#define GPCD_KERNELS_HPP_

#include <Eigen/Dense>
#include <memory>
#include <nlohmann/json.hpp>
#include <string>
#include <variant>
#include <vector>

#include "gpcd/features.hpp"
#include "gpcd/sim/arm.hpp"

namespace gpcd {

/// Binary velocity gate: 1 when |x[index]| < threshold, 0 otherwise.
struct GateSpec {
  int joint = 0;
  double threshold = kDefaultVelocityThreshold;
  int index = 0;  ///< position of the joint velocity in the input vector

  void validate(int input_dim) const;
};

double gate(const Eigen::Ref<const Eigen::VectorXd>& x, const GateSpec& g);
Eigen::VectorXd gate_values(const Eigen::MatrixXd& X, const GateSpec& g);

/// phi(x_i) W phi(x_j)^T with phi the regressor row of one joint, built from
/// the [q, dq, ddq] prefix of the input. The weight prior is fixed.
struct LinearKernel {
  sim::Kinematics kinematics;
  int joint = 0;
  bool friction = true;   ///< append [sign(dq), dq]
  bool gated = false;     ///< null friction columns in quasi-static states
  double threshold = kDefaultVelocityThreshold;
  Eigen::MatrixXd weight_cov;

  int regressor_size() const;
  Eigen::RowVectorXd features(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

/// lambda * exp(-0.5 * sum_d ((x_i,d - x_j,d) / (s_d l_d))^2) over `dims`.
/// `input_scale` (s_d) is fixed and lets the length-scales live in
/// standardized units while the kernel consumes raw inputs.
struct RbfKernel {
  double variance = 1.0;
  Eigen::VectorXd length_scales;
  std::vector<int> dims;
  Eigen::VectorXd input_scale;  ///< empty means all ones
};

struct KernelSpec;

struct SumKernel {
  std::vector<KernelSpec> terms;
};

/// a(x_i) k(x_i, x_j) a(x_j).
struct GatedRescaleKernel {
  std::shared_ptr<const KernelSpec> inner;
  GateSpec gate;
};

struct KernelSpec {
  std::variant<LinearKernel, RbfKernel, SumKernel, GatedRescaleKernel> node;
};

// Construction helpers.
KernelSpec make_rbf(double variance, Eigen::VectorXd length_scales, std::vector<int> dims,
                    Eigen::VectorXd input_scale = {});
KernelSpec make_sum(std::vector<KernelSpec> terms);
KernelSpec make_gated(KernelSpec inner, GateSpec gate);
KernelSpec make_linear(const sim::Kinematics& kin, int joint, Eigen::MatrixXd weight_cov,
                       bool friction = true, bool gated = false,
                       double threshold = kDefaultVelocityThreshold);

/// Throws DimensionError for masks or gate indices outside `input_dim` and
/// std::invalid_argument for non-positive hyperparameters.
void validate(const KernelSpec& spec, int input_dim);

/// Smallest input dimension the kernel can consume.
int required_input_dim(const KernelSpec& spec);

double eval(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& xi,
            const Eigen::Ref<const Eigen::VectorXd>& xj);

/// Row i of X is one input point.
Eigen::MatrixXd gram(const KernelSpec& spec, const Eigen::MatrixXd& X,
                     const Eigen::MatrixXd& X2);
Eigen::MatrixXd gram(const KernelSpec& spec, const Eigen::MatrixXd& X);
Eigen::VectorXd gram_diagonal(const KernelSpec& spec, const Eigen::MatrixXd& X);

/// Trainable hyperparameters, log-space, depth-first order.
int num_params(const KernelSpec& spec);
Eigen::VectorXd get_params(const KernelSpec& spec);
KernelSpec set_params(const KernelSpec& spec, const Eigen::VectorXd& log_params);
std::vector<std::string> param_names(const KernelSpec& spec);

/// g_p = sum_ij W_ij dK_ij/dtheta_p for the symmetric Gram on X, in the
/// order of get_params.
Eigen::VectorXd contract_gradient(const KernelSpec& spec, const Eigen::MatrixXd& X,
                                  const Eigen::MatrixXd& W);

/// Copy of `spec` whose RBF terms take input_scale from the scaler.
KernelSpec with_input_scaling(const KernelSpec& spec, const Scaler& scaler);
/// Copy of `spec` with RBF signal variances multiplied by `factor`.
KernelSpec scale_signal_variances(const KernelSpec& spec, double factor);

nlohmann::json kernel_to_json(const KernelSpec& spec);
KernelSpec kernel_from_json(const nlohmann::json& j);

}  // namespace gpcd

#endif  // GPCD_KERNELS_HPP_
