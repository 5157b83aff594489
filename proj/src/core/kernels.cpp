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

#include "gpcd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gpcd/errors.hpp"
#include "gpcd/sim/plant.hpp"

namespace gpcd {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double input_scale_at(const RbfKernel& k, std::size_t d) {
  return k.input_scale.size() == 0 ? 1.0 : k.input_scale[static_cast<Eigen::Index>(d)];
}

// Column-per-point matrix of the active dims divided by (scale * length).
MatrixXd rbf_points(const RbfKernel& k, const MatrixXd& X) {
  const auto D = static_cast<Eigen::Index>(k.dims.size());
  MatrixXd P(D, X.rows());
  for (Eigen::Index d = 0; d < D; ++d) {
    const double w = 1.0 / (input_scale_at(k, d) * k.length_scales[d]);
    P.row(d) = X.col(k.dims[d]).transpose() * w;
  }
  return P;
}

MatrixXd rbf_gram(const RbfKernel& k, const MatrixXd& X, const MatrixXd& X2, bool symmetric) {
  const MatrixXd P = rbf_points(k, X);
  const MatrixXd Q = symmetric ? P : rbf_points(k, X2);
  const Eigen::Index D = P.rows(), N = P.cols(), M = Q.cols();
  MatrixXd K(N, M);
  for (Eigen::Index j = 0; j < M; ++j) {
    const double* qj = Q.col(j).data();
    const Eigen::Index i0 = symmetric ? j : 0;
    for (Eigen::Index i = i0; i < N; ++i) {
      const double* pi = P.col(i).data();
      double r2 = 0.0;
      for (Eigen::Index d = 0; d < D; ++d) {
        const double u = pi[d] - qj[d];
        r2 += u * u;
      }
      K(i, j) = k.variance * std::exp(-0.5 * r2);
    }
  }
  if (symmetric) K.triangularView<Eigen::StrictlyUpper>() = K.transpose();
  return K;
}

void check_dims(const MatrixXd& X, const MatrixXd& X2) {
  if (X.cols() != X2.cols()) {
    throw DimensionError("gram: inputs have " + std::to_string(X.cols()) + " and " +
                         std::to_string(X2.cols()) + " columns");
  }
}

MatrixXd linear_features(const LinearKernel& k, const MatrixXd& X) {
  MatrixXd F(X.rows(), k.regressor_size());
  for (Eigen::Index i = 0; i < X.rows(); ++i) F.row(i) = k.features(X.row(i).transpose());
  return F;
}

MatrixXd gram_impl(const KernelSpec& spec, const MatrixXd& X, const MatrixXd& X2,
                   bool symmetric) {
  return std::visit(
      overloaded{
          [&](const LinearKernel& k) -> MatrixXd {
            const MatrixXd F = linear_features(k, X);
            if (symmetric) {
              MatrixXd K = F * k.weight_cov * F.transpose();
              K.triangularView<Eigen::StrictlyUpper>() = K.transpose();
              return K;
            }
            return F * k.weight_cov * linear_features(k, X2).transpose();
          },
          [&](const RbfKernel& k) -> MatrixXd { return rbf_gram(k, X, X2, symmetric); },
          [&](const SumKernel& k) -> MatrixXd {
            MatrixXd K = MatrixXd::Zero(X.rows(), X2.rows());
            for (const auto& t : k.terms) K += gram_impl(t, X, X2, symmetric);
            return K;
          },
          [&](const GatedRescaleKernel& k) -> MatrixXd {
            const VectorXd a = gate_values(X, k.gate);
            const VectorXd b = symmetric ? a : gate_values(X2, k.gate);
            return a.asDiagonal() * gram_impl(*k.inner, X, X2, symmetric) * b.asDiagonal();
          },
      },
      spec.node);
}

void contract_impl(const KernelSpec& spec, const MatrixXd& X, const MatrixXd& W,
                   std::vector<double>& out) {
  std::visit(
      overloaded{
          [&](const LinearKernel&) {},
          [&](const RbfKernel& k) {
            const MatrixXd P = rbf_points(k, X);
            const Eigen::Index D = P.rows(), N = P.cols();
            std::vector<double> g(D + 1, 0.0), r(D);
            for (Eigen::Index j = 0; j < N; ++j) {
              const double* pj = P.col(j).data();
              for (Eigen::Index i = 0; i < N; ++i) {
                const double w = W(i, j);
                if (w == 0.0) continue;
                const double* pi = P.col(i).data();
                double r2 = 0.0;
                for (Eigen::Index d = 0; d < D; ++d) {
                  r[d] = pi[d] - pj[d];
                  r[d] *= r[d];
                  r2 += r[d];
                }
                const double kw = w * k.variance * std::exp(-0.5 * r2);
                g[0] += kw;
                for (Eigen::Index d = 0; d < D; ++d) g[d + 1] += kw * r[d];
              }
            }
            out.insert(out.end(), g.begin(), g.end());
          },
          [&](const SumKernel& k) {
            for (const auto& t : k.terms) contract_impl(t, X, W, out);
          },
          [&](const GatedRescaleKernel& k) {
            const VectorXd a = gate_values(X, k.gate);
            const MatrixXd Wg = a.asDiagonal() * W * a.asDiagonal();
            contract_impl(*k.inner, X, Wg, out);
          },
      },
      spec.node);
}

void collect_params(const KernelSpec& spec, std::vector<double>& out) {
  std::visit(overloaded{
                 [&](const LinearKernel&) {},
                 [&](const RbfKernel& k) {
                   out.push_back(std::log(k.variance));
                   for (Eigen::Index d = 0; d < k.length_scales.size(); ++d) {
                     out.push_back(std::log(k.length_scales[d]));
                   }
                 },
                 [&](const SumKernel& k) {
                   for (const auto& t : k.terms) collect_params(t, out);
                 },
                 [&](const GatedRescaleKernel& k) { collect_params(*k.inner, out); },
             },
             spec.node);
}

KernelSpec assign_params(const KernelSpec& spec, const VectorXd& p, Eigen::Index& pos) {
  return std::visit(
      overloaded{
          [&](const LinearKernel& k) -> KernelSpec { return {k}; },
          [&](const RbfKernel& k) -> KernelSpec {
            RbfKernel c = k;
            c.variance = std::exp(p[pos++]);
            for (Eigen::Index d = 0; d < c.length_scales.size(); ++d) {
              c.length_scales[d] = std::exp(p[pos++]);
            }
            return {c};
          },
          [&](const SumKernel& k) -> KernelSpec {
            SumKernel c;
            for (const auto& t : k.terms) c.terms.push_back(assign_params(t, p, pos));
            return {c};
          },
          [&](const GatedRescaleKernel& k) -> KernelSpec {
            return make_gated(assign_params(*k.inner, p, pos), k.gate);
          },
      },
      spec.node);
}

void collect_names(const KernelSpec& spec, const std::string& prefix,
                   std::vector<std::string>& out) {
  std::visit(overloaded{
                 [&](const LinearKernel&) {},
                 [&](const RbfKernel& k) {
                   out.push_back(prefix + "rbf.log_variance");
                   for (int d : k.dims) {
                     out.push_back(prefix + "rbf.log_length[" + std::to_string(d) + "]");
                   }
                 },
                 [&](const SumKernel& k) {
                   for (std::size_t i = 0; i < k.terms.size(); ++i) {
                     collect_names(k.terms[i], prefix + "sum[" + std::to_string(i) + "].", out);
                   }
                 },
                 [&](const GatedRescaleKernel& k) {
                   collect_names(*k.inner, prefix + "gated.", out);
                 },
             },
             spec.node);
}

// Matrix helpers for JSON.
nlohmann::json matrix_to_json(const MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> r(m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j) r[j] = m(i, j);
    rows.push_back(r);
  }
  return rows;
}

MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto n = static_cast<Eigen::Index>(j.size());
  const Eigen::Index m = n > 0 ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  MatrixXd out(n, m);
  for (Eigen::Index r = 0; r < n; ++r) {
    if (static_cast<Eigen::Index>(j.at(r).size()) != m) throw FormatError("ragged matrix");
    for (Eigen::Index c = 0; c < m; ++c) out(r, c) = j.at(r).at(c).get<double>();
  }
  return out;
}

std::vector<double> to_std(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

VectorXd from_std(const std::vector<double>& v) {
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void GateSpec::validate(int input_dim) const {
  if (!(threshold > 0.0)) throw std::invalid_argument("gate threshold must be > 0");
  if (index < 0 || index >= input_dim) {
    throw DimensionError("gate index " + std::to_string(index) +
                         " outside input dimension " + std::to_string(input_dim));
  }
}

double gate(const Eigen::Ref<const VectorXd>& x, const GateSpec& g) {
  if (g.index < 0 || g.index >= x.size()) {
    throw DimensionError("gate index " + std::to_string(g.index) + " out of range");
  }
  return std::abs(x[g.index]) < g.threshold ? 1.0 : 0.0;
}

VectorXd gate_values(const MatrixXd& X, const GateSpec& g) {
  if (g.index < 0 || g.index >= X.cols()) {
    throw DimensionError("gate index " + std::to_string(g.index) + " out of range");
  }
  return (X.col(g.index).array().abs() < g.threshold).cast<double>();
}

int LinearKernel::regressor_size() const {
  return sim::minimal_param_count(kinematics.dof()) + (friction ? 2 : 0);
}

Eigen::RowVectorXd LinearKernel::features(const Eigen::Ref<const VectorXd>& x) const {
  const int n = kinematics.dof();
  if (x.size() < 3 * n) throw DimensionError("linear kernel needs [q, dq, ddq] inputs");
  const VectorXd q = x.segment(0, n), dq = x.segment(n, n), ddq = x.segment(2 * n, n);
  Eigen::RowVectorXd row(regressor_size());
  const int m = sim::minimal_param_count(n);
  row.head(m) = sim::regressor_row(kinematics, joint, q, dq, ddq);
  if (friction) {
    const double v = dq[joint];
    const bool off = gated && std::abs(v) < threshold;
    row[m] = off ? 0.0 : sim::signum(v);
    row[m + 1] = off ? 0.0 : v;
  }
  return row;
}

KernelSpec make_rbf(double variance, VectorXd length_scales, std::vector<int> dims,
                    VectorXd input_scale) {
  RbfKernel k;
  k.variance = variance;
  k.length_scales = std::move(length_scales);
  k.dims = std::move(dims);
  k.input_scale = std::move(input_scale);
  return {k};
}

KernelSpec make_sum(std::vector<KernelSpec> terms) { return {SumKernel{std::move(terms)}}; }

KernelSpec make_gated(KernelSpec inner, GateSpec gate) {
  return {GatedRescaleKernel{std::make_shared<const KernelSpec>(std::move(inner)), gate}};
}

KernelSpec make_linear(const sim::Kinematics& kin, int joint, MatrixXd weight_cov,
                       bool friction, bool gated, double threshold) {
  LinearKernel k;
  k.kinematics = kin;
  k.joint = joint;
  k.friction = friction;
  k.gated = gated;
  k.threshold = threshold;
  k.weight_cov = std::move(weight_cov);
  return {k};
}

void validate(const KernelSpec& spec, int input_dim) {
  std::visit(
      overloaded{
          [&](const LinearKernel& k) {
            if (k.joint < 0 || k.joint >= k.kinematics.dof()) {
              throw DimensionError("linear kernel joint out of range");
            }
            if (3 * k.kinematics.dof() > input_dim) {
              throw DimensionError("linear kernel needs 3n input dims");
            }
            const int p = k.regressor_size();
            if (k.weight_cov.rows() != p || k.weight_cov.cols() != p) {
              throw DimensionError("weight covariance must be " + std::to_string(p) + "x" +
                                   std::to_string(p));
            }
            if (!k.weight_cov.isApprox(k.weight_cov.transpose(), 1e-12)) {
              throw std::invalid_argument("weight covariance must be symmetric");
            }
            Eigen::SelfAdjointEigenSolver<MatrixXd> eig(k.weight_cov, Eigen::EigenvaluesOnly);
            const double scale = std::max(1.0, k.weight_cov.diagonal().cwiseAbs().maxCoeff());
            if (eig.eigenvalues().minCoeff() < -1e-12 * scale) {
              throw std::invalid_argument("weight covariance must be positive semidefinite");
            }
          },
          [&](const RbfKernel& k) {
            if (!(k.variance > 0.0)) throw std::invalid_argument("RBF variance must be > 0");
            if (k.dims.empty()) throw DimensionError("RBF kernel has no active dimensions");
            if (k.length_scales.size() != static_cast<Eigen::Index>(k.dims.size())) {
              throw DimensionError("RBF needs one length-scale per active dimension");
            }
            if (k.input_scale.size() != 0 &&
                k.input_scale.size() != static_cast<Eigen::Index>(k.dims.size())) {
              throw DimensionError("RBF input scale must match the active dimensions");
            }
            for (Eigen::Index d = 0; d < k.length_scales.size(); ++d) {
              if (!(k.length_scales[d] > 0.0) || !(input_scale_at(k, d) > 0.0)) {
                throw std::invalid_argument("RBF length-scales and input scales must be > 0");
              }
            }
            for (int d : k.dims) {
              if (d < 0 || d >= input_dim) {
                throw DimensionError("RBF active dimension " + std::to_string(d) +
                                     " outside input dimension " + std::to_string(input_dim));
              }
            }
          },
          [&](const SumKernel& k) {
            if (k.terms.empty()) throw std::invalid_argument("empty kernel sum");
            for (const auto& t : k.terms) validate(t, input_dim);
          },
          [&](const GatedRescaleKernel& k) {
            if (!k.inner) throw std::invalid_argument("gated kernel without inner kernel");
            k.gate.validate(input_dim);
            validate(*k.inner, input_dim);
          },
      },
      spec.node);
}

int required_input_dim(const KernelSpec& spec) {
  return std::visit(
      overloaded{
          [](const LinearKernel& k) { return 3 * k.kinematics.dof(); },
          [](const RbfKernel& k) {
            return k.dims.empty() ? 0 : *std::max_element(k.dims.begin(), k.dims.end()) + 1;
          },
          [](const SumKernel& k) {
            int d = 0;
            for (const auto& t : k.terms) d = std::max(d, required_input_dim(t));
            return d;
          },
          [](const GatedRescaleKernel& k) {
            return std::max(k.gate.index + 1, required_input_dim(*k.inner));
          },
      },
      spec.node);
}

double eval(const KernelSpec& spec, const Eigen::Ref<const VectorXd>& xi,
            const Eigen::Ref<const VectorXd>& xj) {
  if (xi.size() != xj.size()) throw DimensionError("eval: inputs differ in dimension");
  if (xi.size() < required_input_dim(spec)) throw DimensionError("eval: input too short");
  return std::visit(
      overloaded{
          [&](const LinearKernel& k) -> double {
            return k.features(xi).dot(k.weight_cov * k.features(xj).transpose());
          },
          [&](const RbfKernel& k) -> double {
            double r2 = 0.0;
            for (std::size_t d = 0; d < k.dims.size(); ++d) {
              const double u = (xi[k.dims[d]] - xj[k.dims[d]]) /
                               (input_scale_at(k, d) * k.length_scales[static_cast<Eigen::Index>(d)]);
              r2 += u * u;
            }
            return k.variance * std::exp(-0.5 * r2);
          },
          [&](const SumKernel& k) -> double {
            double s = 0.0;
            for (const auto& t : k.terms) s += eval(t, xi, xj);
            return s;
          },
          [&](const GatedRescaleKernel& k) -> double {
            const double a = gate(xi, k.gate), b = gate(xj, k.gate);
            if (a == 0.0 || b == 0.0) return 0.0;
            return eval(*k.inner, xi, xj);
          },
      },
      spec.node);
}

MatrixXd gram(const KernelSpec& spec, const MatrixXd& X, const MatrixXd& X2) {
  check_dims(X, X2);
  if (X.cols() < required_input_dim(spec)) throw DimensionError("gram: input too short");
  return gram_impl(spec, X, X2, false);
}

MatrixXd gram(const KernelSpec& spec, const MatrixXd& X) {
  if (X.cols() < required_input_dim(spec)) throw DimensionError("gram: input too short");
  return gram_impl(spec, X, X, true);
}

VectorXd gram_diagonal(const KernelSpec& spec, const MatrixXd& X) {
  if (X.cols() < required_input_dim(spec)) throw DimensionError("gram: input too short");
  return std::visit(
      overloaded{
          [&](const LinearKernel& k) -> VectorXd {
            const MatrixXd F = linear_features(k, X);
            return ((F * k.weight_cov).array() * F.array()).rowwise().sum();
          },
          [&](const RbfKernel& k) -> VectorXd {
            return VectorXd::Constant(X.rows(), k.variance);
          },
          [&](const SumKernel& k) -> VectorXd {
            VectorXd d = VectorXd::Zero(X.rows());
            for (const auto& t : k.terms) d += gram_diagonal(t, X);
            return d;
          },
          [&](const GatedRescaleKernel& k) -> VectorXd {
            const VectorXd a = gate_values(X, k.gate);
            return a.cwiseProduct(a).cwiseProduct(gram_diagonal(*k.inner, X));
          },
      },
      spec.node);
}

int num_params(const KernelSpec& spec) { return static_cast<int>(get_params(spec).size()); }

VectorXd get_params(const KernelSpec& spec) {
  std::vector<double> p;
  collect_params(spec, p);
  return from_std(p);
}

KernelSpec set_params(const KernelSpec& spec, const VectorXd& log_params) {
  if (log_params.size() != num_params(spec)) {
    throw DimensionError("set_params: expected " + std::to_string(num_params(spec)) +
                         " values, got " + std::to_string(log_params.size()));
  }
  Eigen::Index pos = 0;
  return assign_params(spec, log_params, pos);
}

std::vector<std::string> param_names(const KernelSpec& spec) {
  std::vector<std::string> out;
  collect_names(spec, "", out);
  return out;
}

VectorXd contract_gradient(const KernelSpec& spec, const MatrixXd& X, const MatrixXd& W) {
  if (W.rows() != X.rows() || W.cols() != X.rows()) {
    throw DimensionError("contract_gradient: weight matrix must be N x N");
  }
  std::vector<double> g;
  contract_impl(spec, X, W, g);
  return from_std(g);
}

KernelSpec with_input_scaling(const KernelSpec& spec, const Scaler& scaler) {
  return std::visit(
      overloaded{
          [&](const LinearKernel& k) -> KernelSpec { return {k}; },
          [&](const RbfKernel& k) -> KernelSpec {
            RbfKernel c = k;
            c.input_scale.resize(static_cast<Eigen::Index>(k.dims.size()));
            for (std::size_t d = 0; d < k.dims.size(); ++d) {
              if (k.dims[d] >= scaler.dim()) throw DimensionError("scaler too short for kernel");
              c.input_scale[static_cast<Eigen::Index>(d)] = scaler.scale[k.dims[d]];
            }
            return {c};
          },
          [&](const SumKernel& k) -> KernelSpec {
            SumKernel c;
            for (const auto& t : k.terms) c.terms.push_back(with_input_scaling(t, scaler));
            return {c};
          },
          [&](const GatedRescaleKernel& k) -> KernelSpec {
            return make_gated(with_input_scaling(*k.inner, scaler), k.gate);
          },
      },
      spec.node);
}

KernelSpec scale_signal_variances(const KernelSpec& spec, double factor) {
  return std::visit(
      overloaded{
          [&](const LinearKernel& k) -> KernelSpec { return {k}; },
          [&](const RbfKernel& k) -> KernelSpec {
            RbfKernel c = k;
            c.variance *= factor;
            return {c};
          },
          [&](const SumKernel& k) -> KernelSpec {
            SumKernel c;
            for (const auto& t : k.terms) c.terms.push_back(scale_signal_variances(t, factor));
            return {c};
          },
          [&](const GatedRescaleKernel& k) -> KernelSpec {
            return make_gated(scale_signal_variances(*k.inner, factor), k.gate);
          },
      },
      spec.node);
}

nlohmann::json kernel_to_json(const KernelSpec& spec) {
  return std::visit(
      overloaded{
          [](const LinearKernel& k) -> nlohmann::json {
            return {{"type", "linear"},
                    {"lengths", k.kinematics.lengths},
                    {"gravity", k.kinematics.gravity},
                    {"joint", k.joint},
                    {"friction", k.friction},
                    {"gated", k.gated},
                    {"threshold", k.threshold},
                    {"weight_cov", matrix_to_json(k.weight_cov)}};
          },
          [](const RbfKernel& k) -> nlohmann::json {
            return {{"type", "rbf"},
                    {"variance", k.variance},
                    {"length_scales", to_std(k.length_scales)},
                    {"dims", k.dims},
                    {"input_scale", to_std(k.input_scale)}};
          },
          [](const SumKernel& k) -> nlohmann::json {
            nlohmann::json terms = nlohmann::json::array();
            for (const auto& t : k.terms) terms.push_back(kernel_to_json(t));
            return {{"type", "sum"}, {"terms", terms}};
          },
          [](const GatedRescaleKernel& k) -> nlohmann::json {
            return {{"type", "gated_rescale"},
                    {"gate", {{"joint", k.gate.joint},
                              {"threshold", k.gate.threshold},
                              {"index", k.gate.index}}},
                    {"inner", kernel_to_json(*k.inner)}};
          },
      },
      spec.node);
}

KernelSpec kernel_from_json(const nlohmann::json& j) {
  try {
    const std::string type = j.at("type").get<std::string>();
    if (type == "linear") {
      sim::Kinematics kin{j.at("lengths").get<std::vector<double>>(),
                          j.at("gravity").get<double>()};
      return make_linear(kin, j.at("joint").get<int>(), matrix_from_json(j.at("weight_cov")),
                         j.at("friction").get<bool>(), j.at("gated").get<bool>(),
                         j.at("threshold").get<double>());
    }
    if (type == "rbf") {
      return make_rbf(j.at("variance").get<double>(),
                      from_std(j.at("length_scales").get<std::vector<double>>()),
                      j.at("dims").get<std::vector<int>>(),
                      from_std(j.at("input_scale").get<std::vector<double>>()));
    }
    if (type == "sum") {
      std::vector<KernelSpec> terms;
      for (const auto& t : j.at("terms")) terms.push_back(kernel_from_json(t));
      return make_sum(std::move(terms));
    }
    if (type == "gated_rescale") {
      const auto& g = j.at("gate");
      GateSpec gs{g.at("joint").get<int>(), g.at("threshold").get<double>(),
                  g.at("index").get<int>()};
      return make_gated(kernel_from_json(j.at("inner")), gs);
    }
    throw FormatError("unknown kernel type '" + type + "'");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed kernel spec: ") + e.what());
  }
}

}  // namespace gpcd
