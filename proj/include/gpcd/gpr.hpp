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

#ifndef GPCD_GPR_HPP_
#define GPCD_GPR_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "gpcd/kernels.hpp"

namespace gpcd {

/// Exact GP posterior over a fixed training set. The prior mean is supplied
/// by the caller as its values at the training inputs.
struct GPModel {
  KernelSpec kernel;
  double noise_variance = 0.0;
  Eigen::MatrixXd X;           ///< training inputs, one row per point
  Eigen::VectorXd y;           ///< training targets
  Eigen::VectorXd prior_mean;  ///< m(X)
  Eigen::MatrixXd factor;      ///< lower Cholesky factor of K + (noise + jitter) I
  Eigen::VectorXd alpha;       ///< (K + noise I)^-1 (y - m(X))
  double jitter = 0.0;         ///< diagonal jitter added on top of the noise

  Eigen::Index size() const { return X.rows(); }
  int input_dim() const { return static_cast<int>(X.cols()); }
};

/// Factorizes K + (noise + jitter) I, escalating jitter by 10x from a tiny
/// start up to 1e-4 * trace(K). Throws IllConditionedError.
GPModel fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
            const Eigen::VectorXd& prior_mean, const KernelSpec& kernel,
            double noise_variance);

struct Prediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;   ///< latent variance; empty when not requested
  std::size_t clamped = 0;    ///< variances raised from a negative value to 0
};

/// `prior_mean` holds m(X*). Evaluated in row blocks to bound memory.
Prediction predict(const GPModel& model, const Eigen::MatrixXd& Xs,
                   const Eigen::VectorXd& prior_mean, bool with_variance = true);

struct MllResult {
  double value = 0.0;
  Eigen::VectorXd gradient;  ///< kernel log-params, then log noise variance
  double jitter = 0.0;
};

/// Negative log marginal likelihood of mean-subtracted targets and its
/// gradient with respect to the log-hyperparameters.
MllResult negative_mll(const KernelSpec& kernel, double noise_variance,
                       const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       bool with_gradient = true);

struct OptimizerConfig {
  double learning_rate = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int iterations = 150;
  int batch_size = 512;
  /// Stop once the evaluation loss improved by less than tolerance * |best|
  /// for `patience` consecutive checks.
  double tolerance = 1e-6;
  int patience = 5;
  int eval_every = 10;
  std::uint64_t seed = 0;
  double min_noise_variance = 1e-8;

  void validate() const;
};

struct OptimizeResult {
  KernelSpec kernel;
  double noise_variance = 0.0;
  std::vector<double> batch_loss;     ///< per iteration, per-point units
  std::vector<int> eval_iteration;    ///< iteration index of each check
  std::vector<double> eval_loss;      ///< fixed evaluation batch, per point
  int best_iteration = 0;
  double initial_loss = 0.0;
  double best_loss = 0.0;
  int retries = 0;
};

/// Minibatch ADAM on the negative MLL. Returns the best hyperparameters seen
/// on a fixed evaluation batch. Deterministic in cfg.seed.
OptimizeResult optimize(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        const KernelSpec& kernel_init, double noise_init,
                        const OptimizerConfig& cfg);

/// Stratified uniform subset: every class keeps its share of `target`
/// (largest-remainder rounding). Returned indices are sorted.
std::vector<std::size_t> subset_downsample(std::span<const int> classes,
                                           std::size_t target, std::uint64_t seed);

}  // namespace gpcd

#endif  // GPCD_GPR_HPP_
