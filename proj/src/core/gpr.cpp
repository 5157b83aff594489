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

#include "gpcd/gpr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "gpcd/errors.hpp"
#include "gpcd/rng.hpp"

namespace gpcd {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr Eigen::Index kPredictBlock = 1024;

Eigen::LLT<MatrixXd> factorize(MatrixXd K, double noise, double& jitter) {
  const auto N = static_cast<double>(K.rows());
  const double tr = K.trace();
  K.diagonal().array() += noise;
  Eigen::LLT<MatrixXd> llt(K);
  if (llt.info() == Eigen::Success) {
    jitter = 0.0;
    return llt;
  }
  const double cap = 1e-4 * std::max(tr, std::numeric_limits<double>::min());
  for (double j = 1e-12 * std::max(tr / N, 1e-300); j <= cap * (1.0 + 1e-9); j *= 10.0) {
    MatrixXd Kj = K;
    Kj.diagonal().array() += j;
    llt.compute(Kj);
    if (llt.info() == Eigen::Success) {
      jitter = j;
      return llt;
    }
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(K, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff(), hi = eig.eigenvalues().maxCoeff();
  const double cond = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  std::ostringstream os;
  os << "kernel matrix factorization failed at maximum jitter " << cap
     << " (condition number " << cond << ")";
  throw IllConditionedError(os.str(), cond);
}

void check_training(const MatrixXd& X, const VectorXd& y) {
  if (X.rows() < 1) throw DimensionError("GP needs at least one training point");
  if (y.size() != X.rows()) {
    throw DimensionError("GP targets (" + std::to_string(y.size()) +
                         ") do not match inputs (" + std::to_string(X.rows()) + ")");
  }
  if (!X.allFinite() || !y.allFinite()) throw std::invalid_argument("non-finite GP training data");
}

MatrixXd rows_of(const MatrixXd& X, const std::vector<Eigen::Index>& idx) {
  MatrixXd out(static_cast<Eigen::Index>(idx.size()), X.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = X.row(idx[k]);
  return out;
}

VectorXd rows_of(const VectorXd& y, const std::vector<Eigen::Index>& idx) {
  VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out[static_cast<Eigen::Index>(k)] = y[idx[k]];
  return out;
}

// k distinct indices of [0, n), sorted.
std::vector<Eigen::Index> sample_without_replacement(Rng& rng, Eigen::Index n, Eigen::Index k) {
  std::vector<Eigen::Index> pool(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto j = i + static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(n - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  pool.resize(static_cast<std::size_t>(k));
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace

GPModel fit(const MatrixXd& X, const VectorXd& y, const VectorXd& prior_mean,
            const KernelSpec& kernel, double noise_variance) {
  check_training(X, y);
  if (prior_mean.size() != y.size()) throw DimensionError("prior mean length mismatch");
  if (!(noise_variance > 0.0)) throw std::invalid_argument("noise variance must be > 0");
  validate(kernel, static_cast<int>(X.cols()));

  GPModel m;
  m.kernel = kernel;
  m.noise_variance = noise_variance;
  m.X = X;
  m.y = y;
  m.prior_mean = prior_mean;
  const Eigen::LLT<MatrixXd> llt = factorize(gram(kernel, X), noise_variance, m.jitter);
  m.factor = llt.matrixL();
  m.alpha = llt.solve(y - prior_mean);
  return m;
}

Prediction predict(const GPModel& model, const MatrixXd& Xs, const VectorXd& prior_mean,
                   bool with_variance) {
  if (model.size() == 0) throw DimensionError("predict on an empty GP model");
  if (Xs.cols() != model.X.cols()) {
    throw DimensionError("predict: inputs have " + std::to_string(Xs.cols()) +
                         " columns, model expects " + std::to_string(model.X.cols()));
  }
  if (prior_mean.size() != Xs.rows()) throw DimensionError("predict: prior mean length mismatch");

  Prediction p;
  p.mean = prior_mean;
  if (with_variance) p.variance.resize(Xs.rows());
  const auto L = model.factor.triangularView<Eigen::Lower>();
  for (Eigen::Index start = 0; start < Xs.rows(); start += kPredictBlock) {
    const Eigen::Index len = std::min(kPredictBlock, Xs.rows() - start);
    const MatrixXd block = Xs.middleRows(start, len);
    const MatrixXd Ks = gram(model.kernel, block, model.X);
    p.mean.segment(start, len) += Ks * model.alpha;
    if (with_variance) {
      const MatrixXd V = L.solve(Ks.transpose());
      VectorXd var = gram_diagonal(model.kernel, block) - V.colwise().squaredNorm().transpose();
      for (Eigen::Index i = 0; i < len; ++i) {
        if (var[i] < 0.0) {
          var[i] = 0.0;
          ++p.clamped;
        }
      }
      p.variance.segment(start, len) = var;
    }
  }
  return p;
}

MllResult negative_mll(const KernelSpec& kernel, double noise_variance, const MatrixXd& X,
                       const VectorXd& y, bool with_gradient) {
  check_training(X, y);
  if (!(noise_variance > 0.0)) throw std::invalid_argument("noise variance must be > 0");
  const auto N = static_cast<double>(X.rows());

  MllResult r;
  const Eigen::LLT<MatrixXd> llt = factorize(gram(kernel, X), noise_variance, r.jitter);
  const VectorXd alpha = llt.solve(y);
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  r.value = 0.5 * y.dot(alpha) + 0.5 * log_det + 0.5 * N * std::log(2.0 * std::numbers::pi);
  if (!with_gradient) return r;

  // dNLL/dtheta = -1/2 tr(W dK/dtheta) with W = alpha alpha^T - K^-1.
  MatrixXd W = -llt.solve(MatrixXd::Identity(X.rows(), X.rows()));
  W.noalias() += alpha * alpha.transpose();
  const VectorXd gk = contract_gradient(kernel, X, W);
  r.gradient.resize(gk.size() + 1);
  r.gradient.head(gk.size()) = -0.5 * gk;
  r.gradient[gk.size()] = -0.5 * noise_variance * W.trace();
  return r;
}

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be > 0");
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (iterations < 1) throw std::invalid_argument("iteration budget must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("ADAM decay rates must lie in [0, 1)");
  }
  if (eval_every < 1 || patience < 1) throw std::invalid_argument("eval_every and patience must be >= 1");
  if (!(min_noise_variance > 0.0)) throw std::invalid_argument("noise floor must be > 0");
}

OptimizeResult optimize(const MatrixXd& X, const VectorXd& y, const KernelSpec& kernel_init,
                        double noise_init, const OptimizerConfig& cfg) {
  cfg.validate();
  check_training(X, y);
  validate(kernel_init, static_cast<int>(X.cols()));
  if (!(noise_init > 0.0)) throw std::invalid_argument("initial noise variance must be > 0");

  const Eigen::Index N = X.rows();
  const Eigen::Index B = std::min<Eigen::Index>(cfg.batch_size, N);
  const int nk = num_params(kernel_init);
  const double log_noise_floor = std::log(cfg.min_noise_variance);

  VectorXd theta(nk + 1);
  theta << get_params(kernel_init), std::log(std::max(noise_init, cfg.min_noise_variance));

  const Rng root(cfg.seed);
  Rng batch_rng = root.derive("minibatch");
  Rng eval_rng = root.derive("evaluation-batch");

  std::vector<Eigen::Index> all(static_cast<std::size_t>(N));
  for (Eigen::Index i = 0; i < N; ++i) all[static_cast<std::size_t>(i)] = i;
  const std::vector<Eigen::Index> eval_idx = B == N ? all : sample_without_replacement(eval_rng, N, B);
  const MatrixXd Xe = rows_of(X, eval_idx);
  const VectorXd ye = rows_of(y, eval_idx);

  auto loss_at = [&](const VectorXd& th, const MatrixXd& Xb, const VectorXd& yb, bool grad) {
    MllResult r = negative_mll(set_params(kernel_init, th.head(nk)), std::exp(th[nk]), Xb, yb, grad);
    const auto n = static_cast<double>(Xb.rows());
    r.value /= n;
    if (grad) r.gradient /= n;
    return r;
  };
  auto eval_loss = [&](const VectorXd& th) {
    try {
      const double v = loss_at(th, Xe, ye, false).value;
      return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    } catch (const IllConditionedError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  OptimizeResult out;
  out.initial_loss = eval_loss(theta);
  if (!std::isfinite(out.initial_loss)) {
    throw OptimizationError("negative MLL is not finite at the initial hyperparameters");
  }
  VectorXd best = theta;
  out.best_loss = out.initial_loss;
  out.best_iteration = 0;
  double lr = cfg.learning_rate;
  VectorXd m1 = VectorXd::Zero(theta.size()), m2 = VectorXd::Zero(theta.size());
  int t = 0, stall = 0;

  for (int it = 0; it < cfg.iterations; ++it) {
    MllResult r;
    bool ok = true;
    try {
      if (B == N) {
        r = loss_at(theta, X, y, true);
      } else {
        const auto idx = sample_without_replacement(batch_rng, N, B);
        r = loss_at(theta, rows_of(X, idx), rows_of(y, idx), true);
      }
      ok = std::isfinite(r.value) && r.gradient.allFinite();
    } catch (const IllConditionedError&) {
      ok = false;
    }
    if (!ok) {
      if (out.retries >= 1) {
        throw OptimizationError("negative MLL became non-finite at iteration " +
                                std::to_string(it) + " after halving the learning rate");
      }
      ++out.retries;
      lr *= 0.5;
      theta = best;
      m1.setZero();
      m2.setZero();
      t = 0;
      continue;
    }
    out.batch_loss.push_back(r.value);

    ++t;
    m1 = cfg.beta1 * m1 + (1.0 - cfg.beta1) * r.gradient;
    m2 = cfg.beta2 * m2 + (1.0 - cfg.beta2) * r.gradient.cwiseAbs2();
    const double c1 = 1.0 - std::pow(cfg.beta1, t), c2 = 1.0 - std::pow(cfg.beta2, t);
    theta.array() -= lr * (m1.array() / c1) / ((m2.array() / c2).sqrt() + cfg.epsilon);
    theta[nk] = std::max(theta[nk], log_noise_floor);

    if ((it + 1) % cfg.eval_every == 0 || it + 1 == cfg.iterations) {
      const double e = eval_loss(theta);
      out.eval_iteration.push_back(it + 1);
      out.eval_loss.push_back(e);
      const bool improved = e < out.best_loss - cfg.tolerance * std::abs(out.best_loss);
      if (e < out.best_loss) {
        best = theta;
        out.best_loss = e;
        out.best_iteration = it + 1;
      }
      stall = improved ? 0 : stall + 1;
      if (stall >= cfg.patience) break;
    }
  }

  out.kernel = set_params(kernel_init, best.head(nk));
  out.noise_variance = std::exp(best[nk]);
  return out;
}

std::vector<std::size_t> subset_downsample(std::span<const int> classes, std::size_t target,
                                           std::uint64_t seed) {
  const std::size_t N = classes.size();
  if (N == 0) throw CoverageError("cannot downsample an empty dataset");
  if (target > N) {
    throw std::invalid_argument("subset size " + std::to_string(target) +
                                " exceeds dataset size " + std::to_string(N));
  }
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < N; ++i) members[classes[i]].push_back(i);

  // Largest-remainder allocation; ties go to the smaller class label.
  struct Quota {
    int label;
    std::size_t count;
    double remainder;
  };
  std::vector<Quota> quotas;
  std::size_t assigned = 0;
  for (const auto& [label, idx] : members) {
    const double exact = static_cast<double>(target) * static_cast<double>(idx.size()) /
                         static_cast<double>(N);
    const auto base = static_cast<std::size_t>(std::floor(exact));
    quotas.push_back({label, base, exact - static_cast<double>(base)});
    assigned += base;
  }
  std::vector<std::size_t> order(quotas.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return quotas[a].remainder > quotas[b].remainder;
  });
  for (std::size_t k = 0; assigned < target; ++k) {
    ++quotas[order[k % order.size()]].count;
    ++assigned;
  }

  Rng rng(seed);
  std::vector<std::size_t> out;
  out.reserve(target);
  for (const Quota& q : quotas) {
    std::vector<std::size_t> pool = members[q.label];
    Rng stream = rng.derive("class:" + std::to_string(q.label));
    for (std::size_t i = 0; i < q.count; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(stream.index(pool.size() - i));
      std::swap(pool[i], pool[j]);
    }
    out.insert(out.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(q.count));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace gpcd
