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

#include "gpcd/estimators.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "gpcd/errors.hpp"

namespace gpcd {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kOlsCondition = 1e8;
constexpr double kRidgeCondition = 1e12;

void check_joint(int joint, int dof) {
  if (joint < 0 || joint >= dof) {
    throw DimensionError("joint index " + std::to_string(joint) + " out of range for " +
                         std::to_string(dof) + " joints");
  }
}

void check_samples(std::span<const JointSample> samples, int dof, bool augmented) {
  for (const auto& s : samples) {
    if (s.q.size() != dof || s.dq.size() != dof || s.ddq.size() != dof) {
      throw DimensionError("sample state does not match the model's joint count");
    }
    if (augmented && (s.e_q.size() != dof || s.de_q.size() != dof || s.i_cmd.size() != dof)) {
      throw DimensionError("gated estimator needs tracking errors and commanded currents");
    }
  }
}

double population_variance(const VectorXd& v) {
  if (v.size() == 0) return 0.0;
  return (v.array() - v.mean()).square().mean();
}

std::vector<int> iota(int from, int to) {
  std::vector<int> d;
  for (int i = from; i < to; ++i) d.push_back(i);
  return d;
}

}  // namespace

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::kParametric: return "P_f";
    case Variant::kStandardSemiParametric: return "SP_S";
    case Variant::kGatedSemiParametric: return "SP_P";
  }
  throw std::invalid_argument("unknown estimator variant");
}

Variant parse_variant(const std::string& name) {
  for (Variant v : kAllVariants) {
    if (variant_name(v) == name) return v;
  }
  throw std::invalid_argument("unknown estimator variant '" + name + "'");
}

JointMotor JointMotor::from(const sim::MotorParams& motor, int joint) {
  return {motor.reflected_inertia(joint), motor.equivalent_damping(joint),
          motor.current_gain(joint)};
}

Eigen::RowVectorXd ParametricModel::row(const JointSample& s, bool gated) const {
  const RegressorRow r = regressor_row(kinematics, s, joint, gated, threshold);
  return friction ? r.full() : r.dynamic;
}

double ParametricModel::torque(const JointSample& s, bool gated) const {
  return row(s, gated).dot(weights);
}

double ParametricModel::current(const JointSample& s, bool gated) const {
  return (torque(s, gated) + motor.reflected_inertia * s.ddq[joint] +
          motor.damping * s.dq[joint]) /
         motor.current_gain;
}

ParametricModel fit_parametric(std::span<const JointSample> samples, const sim::Kinematics& kin,
                               const sim::MotorParams& motor, int joint,
                               const ParametricOptions& opts) {
  check_joint(joint, kin.dof());
  check_samples(samples, kin.dof(), false);

  ParametricModel pm;
  pm.kinematics = kin;
  pm.joint = joint;
  pm.motor = JointMotor::from(motor, joint);
  pm.friction = opts.friction;
  pm.threshold = opts.threshold;

  std::vector<Eigen::RowVectorXd> rows;
  std::vector<double> targets;
  for (const auto& s : samples) {
    if (opts.dynamical_only && std::abs(s.dq[joint]) < opts.threshold) continue;
    rows.push_back(pm.row(s, false));
    targets.push_back(pm.motor.current_gain * s.i_meas[joint] -
                      pm.motor.reflected_inertia * s.ddq[joint] -
                      pm.motor.damping * s.dq[joint]);
  }
  const int p = sim::minimal_param_count(kin.dof()) + (opts.friction ? 2 : 0);
  if (rows.empty()) throw RankDeficientError("no usable samples for the parametric fit");

  MatrixXd Phi(static_cast<Eigen::Index>(rows.size()), p);
  for (std::size_t k = 0; k < rows.size(); ++k) Phi.row(static_cast<Eigen::Index>(k)) = rows[k];
  const VectorXd y = Eigen::Map<const VectorXd>(targets.data(), static_cast<Eigen::Index>(targets.size()));

  // Columns that vanish identically for this joint cannot be identified.
  const VectorXd norms = Phi.colwise().norm().transpose();
  const double top = norms.maxCoeff();
  pm.active.assign(p, false);
  std::vector<int> cols;
  for (int c = 0; c < p; ++c) {
    if (norms[c] > 1e-12 * top) {
      pm.active[c] = true;
      cols.push_back(c);
    }
  }
  const auto pa = static_cast<Eigen::Index>(cols.size());
  if (pa == 0 || Phi.rows() < pa) {
    throw RankDeficientError("fewer usable samples than regressor columns");
  }
  MatrixXd A(Phi.rows(), pa);
  VectorXd scale(pa);
  for (Eigen::Index c = 0; c < pa; ++c) {
    scale[c] = norms[cols[c]];
    A.col(c) = Phi.col(cols[c]) / scale[c];
  }

  Eigen::BDCSVD<MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd& sv = svd.singularValues();
  pm.condition = sv[pa - 1] > 0.0 ? sv[0] / sv[pa - 1] : std::numeric_limits<double>::infinity();
  VectorXd ws;
  if (pm.condition <= kOlsCondition) {
    ws = svd.solve(y);
  } else if (pm.condition <= kRidgeCondition) {
    MatrixXd G = A.transpose() * A;
    G.diagonal().array() += 1e-8 * G.trace();
    ws = G.ldlt().solve(A.transpose() * y);
    pm.ridge = true;
  } else {
    std::ostringstream os;
    os << "regressor is rank deficient (condition number " << pm.condition << ")";
    throw RankDeficientError(os.str());
  }
  pm.weights = VectorXd::Zero(p);
  for (Eigen::Index c = 0; c < pa; ++c) pm.weights[cols[c]] = ws[c] / scale[c];
  return pm;
}

std::vector<int> gate_classes(std::span<const JointSample> samples, double threshold) {
  std::vector<int> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    int label = 0;
    for (int j = 0; j < s.dof(); ++j) {
      if (std::abs(s.dq[j]) < threshold) label |= 1 << j;
    }
    out.push_back(label);
  }
  return out;
}

KernelSpec initial_kernel(Variant v, int dof, int joint, double signal_variance,
                          double threshold) {
  check_joint(joint, dof);
  const int ns = 3 * dof, na = 6 * dof;
  switch (v) {
    case Variant::kParametric:
      throw std::invalid_argument("the parametric estimator has no kernel");
    case Variant::kStandardSemiParametric:
      return make_rbf(signal_variance, VectorXd::Ones(ns), iota(0, ns));
    case Variant::kGatedSemiParametric: {
      const GateSpec g{joint, threshold, velocity_index(dof, joint)};
      return make_sum({make_gated(make_rbf(signal_variance, VectorXd::Ones(na), iota(0, na)), g),
                       make_rbf(signal_variance, VectorXd::Ones(ns), iota(0, ns))});
    }
  }
  throw std::invalid_argument("unknown estimator variant");
}

MatrixXd estimator_inputs(Variant v, std::span<const JointSample> samples) {
  return v == Variant::kGatedSemiParametric ? augmented_feature_matrix(samples)
                                            : standard_feature_matrix(samples);
}

BuildResult build(Variant variant, std::span<const JointSample> train, const sim::Kinematics& kin,
                  const sim::MotorParams& motor, int joint, const BuildOptions& opts) {
  const int n = kin.dof();
  check_joint(joint, n);
  if (train.empty()) throw CoverageError("empty training set");
  const bool gated = variant == Variant::kGatedSemiParametric;
  check_samples(train, n, gated);

  if (gated) {
    std::size_t qs = 0;
    for (const auto& s : train) qs += std::abs(s.dq[joint]) < opts.threshold;
    if (qs == 0 || qs == train.size()) {
      throw CoverageError("gated estimator for joint " + std::to_string(joint) +
                          " needs both quasi-static and dynamical training samples (" +
                          std::to_string(qs) + " of " + std::to_string(train.size()) +
                          " quasi-static)");
    }
  }

  BuildResult out;
  Estimator& est = out.estimator;
  est.variant = variant;
  est.joint = joint;
  est.threshold = opts.threshold;
  est.parametric = opts.mean ? *opts.mean : fit_parametric(train, kin, motor, joint, opts.parametric);
  if (variant == Variant::kParametric) return out;

  const auto N = static_cast<Eigen::Index>(train.size());
  const MatrixXd X = estimator_inputs(variant, train);
  VectorXd y(N), m(N);
  for (Eigen::Index k = 0; k < N; ++k) {
    y[k] = train[k].i_meas[joint];
    m[k] = est.parametric.current(train[k], gated);
  }
  const VectorXd r = y - m;
  const double var = std::max(population_variance(r), 1e-12);

  est.scaler = opts.standardize ? Scaler::fit(X) : Scaler::identity(static_cast<int>(X.cols()));
  KernelSpec kernel = with_input_scaling(initial_kernel(variant, n, joint, var, opts.threshold),
                                         est.scaler);
  double noise = 0.01 * var;
  if (!opts.skip_optimization) {
    out.optimization = optimize(X, r, kernel, noise, opts.optimizer);
    kernel = out.optimization->kernel;
    noise = out.optimization->noise_variance;
  }

  const std::size_t target = std::min<std::size_t>(opts.subset_size, train.size());
  out.subset = subset_downsample(gate_classes(train, opts.threshold), target, opts.subset_seed);
  const auto M = static_cast<Eigen::Index>(out.subset.size());
  MatrixXd Xs(M, X.cols());
  VectorXd ys(M), ms(M);
  std::size_t qs = 0;
  for (Eigen::Index k = 0; k < M; ++k) {
    const auto i = static_cast<Eigen::Index>(out.subset[k]);
    Xs.row(k) = X.row(i);
    ys[k] = y[i];
    ms[k] = m[i];
    qs += std::abs(train[out.subset[k]].dq[joint]) < opts.threshold;
  }
  if (gated && (qs == 0 || qs == out.subset.size())) {
    throw CoverageError("subset lost a gate class for joint " + std::to_string(joint));
  }
  est.gp = fit(Xs, ys, ms, kernel, noise);
  return out;
}

Prediction predict_current(const Estimator& est, std::span<const JointSample> samples,
                           bool with_variance) {
  const bool gated = est.gated_mean();
  check_samples(samples, est.dof(), gated);
  const auto N = static_cast<Eigen::Index>(samples.size());
  VectorXd m(N);
  for (Eigen::Index k = 0; k < N; ++k) m[k] = est.parametric.current(samples[k], gated);
  if (!est.gp) {
    Prediction p;
    p.mean = std::move(m);
    return p;
  }
  if (N == 0) {
    Prediction p;
    p.mean.resize(0);
    if (with_variance) p.variance.resize(0);
    return p;
  }
  return predict(*est.gp, estimator_inputs(est.variant, samples), m, with_variance);
}

double nmse(const VectorXd& targets, const VectorXd& predictions, const VectorXd& reference) {
  if (targets.size() != predictions.size()) {
    throw DimensionError("nmse: targets and predictions differ in length");
  }
  if (targets.size() == 0) throw DimensionError("nmse: empty input");
  const double var = population_variance(reference);
  if (!(var > 0.0)) throw std::domain_error("nmse: reference set has zero variance");
  return (targets - predictions).squaredNorm() / static_cast<double>(targets.size()) / var;
}

}  // namespace gpcd
