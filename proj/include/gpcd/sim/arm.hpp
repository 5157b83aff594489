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

#ifndef GPCD_SIM_ARM_HPP_
#define GPCD_SIM_ARM_HPP_

#include <Eigen/Dense>
#include <vector>

namespace gpcd::sim {

/// Kinematic description of a planar serial arm moving in a vertical plane.
/// Joint angles are relative; link k points along the absolute angle
/// theta_k = q_1 + ... + q_k, measured from the horizontal x axis. Gravity
/// acts along -y.
struct Kinematics {
  std::vector<double> lengths;  ///< m
  double gravity = 9.81;        ///< m/s^2

  int dof() const { return static_cast<int>(lengths.size()); }
};

/// Rigid-body parameters of a planar n-R arm. Each center of mass lies on
/// its link axis at distance com[k] from joint k.
struct DynamicParams {
  std::vector<double> mass;     ///< kg
  std::vector<double> length;   ///< m
  std::vector<double> com;      ///< m
  std::vector<double> inertia;  ///< kg m^2, about the center of mass
  double gravity = 9.81;

  static DynamicParams planar2r_default();

  int dof() const { return static_cast<int>(mass.size()); }
  Kinematics kinematics() const { return {length, gravity}; }

  /// Throws std::invalid_argument on non-positive masses/lengths/inertias
  /// or inconsistent sizes.
  void validate() const;

  /// Minimal parameter vector w_d such that tau = regressor(q,dq,ddq) * w_d.
  /// Layout (3n - 1 entries):
  ///   [J_1..J_n]  J_k = I_k + m_k c_k^2 + l_k^2 sum_{i>k} m_i
  ///   [z_2..z_n]  coupling moments, z_k = m_k c_k + l_k sum_{i>k} m_i
  ///   [s_1..s_n]  gravity moments, numerically equal to z_k but attached to
  ///               different regressor columns.
  Eigen::VectorXd minimal_params() const;
};

/// Dimension of the minimal parameter vector for an n-link planar arm.
inline int minimal_param_count(int dof) { return 3 * dof - 1; }

/// Link-side rigid-body terms, computed from the physical parameters through
/// the center-of-mass Jacobians.
Eigen::MatrixXd mass_matrix(const DynamicParams& p, const Eigen::VectorXd& q);
Eigen::MatrixXd coriolis_matrix(const DynamicParams& p, const Eigen::VectorXd& q,
                                const Eigen::VectorXd& dq);
Eigen::VectorXd gravity_torque(const DynamicParams& p, const Eigen::VectorXd& q);

/// tau = M(q) ddq + C(q,dq) dq + tau_g(q).
Eigen::VectorXd inverse_dynamics(const DynamicParams& p, const Eigen::VectorXd& q,
                                 const Eigen::VectorXd& dq,
                                 const Eigen::VectorXd& ddq);

/// n x (3n-1) regressor Phi^d, linear in the minimal parameters.
Eigen::MatrixXd regressor(const Kinematics& k, const Eigen::VectorXd& q,
                          const Eigen::VectorXd& dq, const Eigen::VectorXd& ddq);

/// Single row of the regressor for joint `joint` (0-based).
Eigen::RowVectorXd regressor_row(const Kinematics& k, int joint,
                                 const Eigen::VectorXd& q,
                                 const Eigen::VectorXd& dq,
                                 const Eigen::VectorXd& ddq);

/// Kinetic energy of the links (no rotor contribution).
double kinetic_energy(const DynamicParams& p, const Eigen::VectorXd& q,
                      const Eigen::VectorXd& dq);

/// End-effector position.
Eigen::Vector2d forward_kinematics(const Kinematics& k, const Eigen::VectorXd& q);

/// 2 x n translational Jacobian of the end effector.
Eigen::MatrixXd tool_jacobian(const Kinematics& k, const Eigen::VectorXd& q);

}  // namespace gpcd::sim

#endif  // GPCD_SIM_ARM_HPP_
