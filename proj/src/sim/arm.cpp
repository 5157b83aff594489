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

#include "gpcd/sim/arm.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "gpcd/errors.hpp"

namespace gpcd::sim {

namespace {

using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

Vector2d unit(double theta) { return {std::cos(theta), std::sin(theta)}; }
Vector2d unit_perp(double theta) { return {-std::sin(theta), std::cos(theta)}; }

VectorXd absolute_angles(const VectorXd& q) {
  VectorXd theta(q.size());
  double acc = 0.0;
  for (Eigen::Index k = 0; k < q.size(); ++k) {
    acc += q[k];
    theta[k] = acc;
  }
  return theta;
}

void check_state(int n, const VectorXd& v, const char* name) {
  if (v.size() != n) {
    throw DimensionError(std::string(name) + " has size " +
                         std::to_string(v.size()) + ", expected " +
                         std::to_string(n));
  }
}

// Translational Jacobian of the center of mass of link i.
MatrixXd com_jacobian(const DynamicParams& p, const VectorXd& theta, int i) {
  const int n = p.dof();
  MatrixXd J = MatrixXd::Zero(2, n);
  for (int k = 0; k <= i; ++k) {
    Vector2d col = p.com[i] * unit_perp(theta[i]);
    for (int j = k; j < i; ++j) col += p.length[j] * unit_perp(theta[j]);
    J.col(k) = col;
  }
  return J;
}

// d(J_ci)/d(q_m).
MatrixXd com_jacobian_derivative(const DynamicParams& p, const VectorXd& theta,
                                 int i, int m) {
  const int n = p.dof();
  MatrixXd H = MatrixXd::Zero(2, n);
  if (m > i) return H;
  for (int k = 0; k <= i; ++k) {
    Vector2d col = -p.com[i] * unit(theta[i]);
    for (int j = std::max(k, m); j < i; ++j) col -= p.length[j] * unit(theta[j]);
    H.col(k) = col;
  }
  return H;
}

// dM/dq_m.
MatrixXd mass_matrix_derivative(const DynamicParams& p, const VectorXd& theta,
                                int m) {
  const int n = p.dof();
  MatrixXd dM = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const MatrixXd J = com_jacobian(p, theta, i);
    const MatrixXd H = com_jacobian_derivative(p, theta, i, m);
    dM += p.mass[i] * (H.transpose() * J + J.transpose() * H);
  }
  return dM;
}

}  // namespace

DynamicParams DynamicParams::planar2r_default() {
  DynamicParams p;
  p.mass = {2.0, 1.0};
  p.length = {0.5, 0.5};
  p.com = {0.25, 0.25};
  // Uniform slender rods about their centers.
  p.inertia = {2.0 * 0.25 / 12.0, 1.0 * 0.25 / 12.0};
  p.gravity = 9.81;
  return p;
}

void DynamicParams::validate() const {
  const std::size_t n = mass.size();
  if (n == 0) throw std::invalid_argument("arm must have at least one link");
  if (length.size() != n || com.size() != n || inertia.size() != n) {
    throw std::invalid_argument("inconsistent link parameter sizes");
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (!(mass[k] > 0.0)) throw std::invalid_argument("link mass must be > 0");
    if (!(length[k] > 0.0)) throw std::invalid_argument("link length must be > 0");
    if (!(inertia[k] > 0.0)) throw std::invalid_argument("link inertia must be > 0");
    if (!std::isfinite(com[k])) throw std::invalid_argument("com offset must be finite");
  }
  if (!std::isfinite(gravity)) throw std::invalid_argument("gravity must be finite");
}

VectorXd DynamicParams::minimal_params() const {
  const int n = dof();
  VectorXd w(minimal_param_count(n));
  for (int k = 0; k < n; ++k) {
    double distal_mass = 0.0;
    for (int i = k + 1; i < n; ++i) distal_mass += mass[i];
    const double moment = mass[k] * com[k] + length[k] * distal_mass;
    w[k] = inertia[k] + mass[k] * com[k] * com[k] + length[k] * length[k] * distal_mass;
    if (k >= 1) w[n + k - 1] = moment;
    w[2 * n - 1 + k] = moment;
  }
  return w;
}

MatrixXd mass_matrix(const DynamicParams& p, const VectorXd& q) {
  const int n = p.dof();
  check_state(n, q, "q");
  const VectorXd theta = absolute_angles(q);
  MatrixXd M = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const MatrixXd J = com_jacobian(p, theta, i);
    M += p.mass[i] * J.transpose() * J;
    // Angular velocity of link i is the sum of the first i+1 joint rates.
    M.topLeftCorner(i + 1, i + 1).array() += p.inertia[i];
  }
  return M;
}

MatrixXd coriolis_matrix(const DynamicParams& p, const VectorXd& q,
                         const VectorXd& dq) {
  const int n = p.dof();
  check_state(n, q, "q");
  check_state(n, dq, "dq");
  const VectorXd theta = absolute_angles(q);
  std::vector<MatrixXd> dM;
  dM.reserve(n);
  for (int m = 0; m < n; ++m) dM.push_back(mass_matrix_derivative(p, theta, m));
  // Christoffel symbols of the first kind.
  MatrixXd C = MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < n; ++j) {
      double c = 0.0;
      for (int m = 0; m < n; ++m) {
        c += 0.5 * (dM[m](k, j) + dM[j](k, m) - dM[k](j, m)) * dq[m];
      }
      C(k, j) = c;
    }
  }
  return C;
}

VectorXd gravity_torque(const DynamicParams& p, const VectorXd& q) {
  const int n = p.dof();
  check_state(n, q, "q");
  const VectorXd theta = absolute_angles(q);
  VectorXd g = VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    const MatrixXd J = com_jacobian(p, theta, i);
    g += p.mass[i] * p.gravity * J.row(1).transpose();
  }
  return g;
}

VectorXd inverse_dynamics(const DynamicParams& p, const VectorXd& q,
                          const VectorXd& dq, const VectorXd& ddq) {
  check_state(p.dof(), ddq, "ddq");
  return mass_matrix(p, q) * ddq + coriolis_matrix(p, q, dq) * dq +
         gravity_torque(p, q);
}

MatrixXd regressor(const Kinematics& k, const VectorXd& q, const VectorXd& dq,
                   const VectorXd& ddq) {
  const int n = k.dof();
  check_state(n, q, "q");
  check_state(n, dq, "dq");
  check_state(n, ddq, "ddq");
  const VectorXd th = absolute_angles(q);
  const VectorXd dth = absolute_angles(dq);
  const VectorXd ddth = absolute_angles(ddq);
  const int m = minimal_param_count(n);

  // Rows expressed in absolute-angle coordinates first.
  MatrixXd Y = MatrixXd::Zero(n, m);
  for (int a = 0; a < n; ++a) {
    Y(a, a) = ddth[a];
    Y(a, 2 * n - 1 + a) = k.gravity * std::cos(th[a]);
  }
  for (int c = 1; c < n; ++c) {
    const int col = n + c - 1;
    for (int b = 0; b < c; ++b) {
      const double d = th[c] - th[b];
      Y(c, col) += k.lengths[b] * (ddth[b] * std::cos(d) + dth[b] * dth[b] * std::sin(d));
    }
    for (int a = 0; a < c; ++a) {
      const double d = th[a] - th[c];
      Y(a, col) += k.lengths[a] * (ddth[c] * std::cos(d) + dth[c] * dth[c] * std::sin(d));
    }
  }
  // Map to relative joint coordinates: tau_q,i = sum_{a >= i} tau_theta,a.
  for (int i = n - 2; i >= 0; --i) Y.row(i) += Y.row(i + 1);
  return Y;
}

Eigen::RowVectorXd regressor_row(const Kinematics& k, int joint,
                                 const VectorXd& q, const VectorXd& dq,
                                 const VectorXd& ddq) {
  if (joint < 0 || joint >= k.dof()) {
    throw DimensionError("joint index " + std::to_string(joint) + " out of range");
  }
  return regressor(k, q, dq, ddq).row(joint);
}

double kinetic_energy(const DynamicParams& p, const VectorXd& q,
                      const VectorXd& dq) {
  return 0.5 * dq.dot(mass_matrix(p, q) * dq);
}

Vector2d forward_kinematics(const Kinematics& k, const VectorXd& q) {
  check_state(k.dof(), q, "q");
  const VectorXd theta = absolute_angles(q);
  Vector2d x = Vector2d::Zero();
  for (int j = 0; j < k.dof(); ++j) x += k.lengths[j] * unit(theta[j]);
  return x;
}

MatrixXd tool_jacobian(const Kinematics& k, const VectorXd& q) {
  const int n = k.dof();
  check_state(n, q, "q");
  const VectorXd theta = absolute_angles(q);
  MatrixXd J = MatrixXd::Zero(2, n);
  for (int c = 0; c < n; ++c) {
    for (int j = c; j < n; ++j) J.col(c) += k.lengths[j] * unit_perp(theta[j]);
  }
  return J;
}

}  // namespace gpcd::sim
