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

// Reference computations written independently of the library: closed-form
// two-link dynamics and dense Gaussian conditioning.

#ifndef GPCD_TESTS_ORACLES_HPP_
#define GPCD_TESTS_ORACLES_HPP_

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <vector>

#include "gpcd/sim/arm.hpp"

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Textbook two-link mass matrix, relative joint angles.
inline MatrixXd mass_matrix_2r(const gpcd::sim::DynamicParams& p, const VectorXd& q) {
  const double m1 = p.mass[0], m2 = p.mass[1], l1 = p.length[0];
  const double c1 = p.com[0], c2 = p.com[1], I1 = p.inertia[0], I2 = p.inertia[1];
  const double cs = std::cos(q[1]);
  MatrixXd M(2, 2);
  M(0, 0) = I1 + I2 + m1 * c1 * c1 + m2 * (l1 * l1 + c2 * c2 + 2.0 * l1 * c2 * cs);
  M(0, 1) = M(1, 0) = I2 + m2 * (c2 * c2 + l1 * c2 * cs);
  M(1, 1) = I2 + m2 * c2 * c2;
  return M;
}

/// Centripetal and Coriolis torque C(q, dq) dq.
inline VectorXd velocity_torque_2r(const gpcd::sim::DynamicParams& p, const VectorXd& q,
                                   const VectorXd& dq) {
  const double h = p.mass[1] * p.length[0] * p.com[1] * std::sin(q[1]);
  VectorXd c(2);
  c[0] = -h * (2.0 * dq[0] * dq[1] + dq[1] * dq[1]);
  c[1] = h * dq[0] * dq[0];
  return c;
}

/// Gravity torque; gravity along -y, angles from the x axis.
inline VectorXd gravity_2r(const gpcd::sim::DynamicParams& p, const VectorXd& q) {
  const double g = p.gravity, m1 = p.mass[0], m2 = p.mass[1];
  const double c12 = std::cos(q[0] + q[1]);
  VectorXd t(2);
  t[0] = (m1 * p.com[0] + m2 * p.length[0]) * g * std::cos(q[0]) + m2 * p.com[1] * g * c12;
  t[1] = m2 * p.com[1] * g * c12;
  return t;
}

inline VectorXd inverse_dynamics_2r(const gpcd::sim::DynamicParams& p, const VectorXd& q,
                                    const VectorXd& dq, const VectorXd& ddq) {
  return mass_matrix_2r(p, q) * ddq + velocity_torque_2r(p, q, dq) + gravity_2r(p, q);
}

/// [J1, J2, z2, s1, s2] for the two-link arm.
inline VectorXd minimal_params_2r(const gpcd::sim::DynamicParams& p) {
  const double m1 = p.mass[0], m2 = p.mass[1], l1 = p.length[0];
  VectorXd w(5);
  w << p.inertia[0] + m1 * p.com[0] * p.com[0] + l1 * l1 * m2,
      p.inertia[1] + m2 * p.com[1] * p.com[1], m2 * p.com[1], m1 * p.com[0] + l1 * m2,
      m2 * p.com[1];
  return w;
}

/// Kinetic energy including reflected rotor inertia on the diagonal.
inline double kinetic_energy_2r(const gpcd::sim::DynamicParams& p, const VectorXd& rotor,
                                const VectorXd& q, const VectorXd& dq) {
  MatrixXd M = mass_matrix_2r(p, q);
  M.diagonal() += rotor;
  return 0.5 * dq.dot(M * dq);
}

/// ARD squared exponential on a subset of dimensions.
inline double rbf(const VectorXd& a, const VectorXd& b, double variance, const VectorXd& ls,
                  const std::vector<int>& dims) {
  double r = 0.0;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    const double d = (a[dims[k]] - b[dims[k]]) / ls[static_cast<Eigen::Index>(k)];
    r += d * d;
  }
  return variance * std::exp(-0.5 * r);
}

template <typename Kernel>
MatrixXd dense_gram(const Kernel& k, const MatrixXd& A, const MatrixXd& B) {
  MatrixXd K(A.rows(), B.rows());
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < B.rows(); ++j) {
      K(i, j) = k(A.row(i).transpose(), B.row(j).transpose());
    }
  }
  return K;
}

struct Posterior {
  VectorXd mean, variance;
};

/// Gaussian conditioning through an explicit inverse.
inline Posterior dense_posterior(const MatrixXd& K, const MatrixXd& Ks, const VectorXd& kss,
                                 double noise, const VectorXd& y, const VectorXd& m,
                                 const VectorXd& ms) {
  const MatrixXd A = (K + noise * MatrixXd::Identity(K.rows(), K.rows())).inverse();
  Posterior p;
  p.mean = ms + Ks * A * (y - m);
  p.variance = kss - (Ks * A * Ks.transpose()).diagonal();
  return p;
}

/// Negative log marginal likelihood from a dense inverse and determinant.
inline double dense_nll(const MatrixXd& K, double noise, const VectorXd& r) {
  const MatrixXd C = K + noise * MatrixXd::Identity(K.rows(), K.rows());
  const Eigen::FullPivLU<MatrixXd> lu(C);
  return 0.5 * r.dot(lu.solve(r)) + 0.5 * std::log(lu.determinant()) +
         0.5 * static_cast<double>(K.rows()) * std::log(2.0 * std::numbers::pi);
}

}  // namespace oracle

#endif  // GPCD_TESTS_ORACLES_HPP_
