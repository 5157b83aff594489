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

#ifndef GPCD_SIM_PLANT_HPP_
#define GPCD_SIM_PLANT_HPP_

#include <Eigen/Dense>
#include <vector>

#include "gpcd/sim/arm.hpp"

namespace gpcd::sim {

/// Geared DC motors, one per joint, no cross-coupling.
struct MotorParams {
  std::vector<double> rotor_inertia;    ///< J_m, kg m^2
  std::vector<double> damping;          ///< B_m, N m s/rad
  std::vector<double> torque_constant;  ///< K_tau, N m/A
  std::vector<double> gear_ratio;       ///< K_r

  static MotorParams uniform(int dof, double rotor_inertia, double damping,
                             double torque_constant, double gear_ratio);

  int dof() const { return static_cast<int>(rotor_inertia.size()); }
  void validate() const;

  /// K_r^2 J_m, added to the link mass matrix diagonal.
  double reflected_inertia(int j) const {
    return gear_ratio[j] * gear_ratio[j] * rotor_inertia[j];
  }
  /// B_eq = K_r^2 B_m.
  double equivalent_damping(int j) const {
    return gear_ratio[j] * gear_ratio[j] * damping[j];
  }
  /// K_eq = K_tau K_r, joint torque per amp.
  double current_gain(int j) const { return torque_constant[j] * gear_ratio[j]; }
};

/// Stiction / Coulomb / viscous coefficients of one joint.
struct JointFriction {
  double static_coeff = 0.0;   ///< F_s, N m
  double kinetic_coeff = 0.0;  ///< F_k, N m
  double viscous_coeff = 0.0;  ///< F_v, N m s/rad

  void validate() const;
};

struct FrictionParams {
  std::vector<JointFriction> joints;

  static FrictionParams uniform(int dof, JointFriction f);
  static FrictionParams none(int dof) { return uniform(dof, {}); }
  int dof() const { return static_cast<int>(joints.size()); }
  void validate() const;
};

/// sign(0) = 0.
inline double signum(double x) { return (x > 0.0) - (x < 0.0); }

/// Friction torque opposing the motion of a joint.
///
/// Inside the stiction band |velocity| < band the friction cancels the
/// applied (non-friction) torque as long as it does not exceed F_s; past
/// that it breaks away at kinetic level F_k sign(applied). Outside the band
/// it is F_k sign(velocity) + F_v velocity.
double friction_torque(double velocity, double applied_torque,
                       const JointFriction& f, double band);

/// PID current controller with output saturation and a clamped integral.
struct ControllerParams {
  std::vector<double> kp;          ///< A/rad
  std::vector<double> kd;          ///< A s/rad
  std::vector<double> ki;          ///< A/(rad s)
  std::vector<double> saturation;  ///< A
  std::vector<double> windup;      ///< A, bound on the integral contribution

  static ControllerParams uniform(int dof, double kp, double kd, double ki,
                                  double saturation, double windup);
  int dof() const { return static_cast<int>(kp.size()); }
  void validate() const;
};

struct ControllerOutput {
  Eigen::VectorXd current;   ///< commanded current i_c
  Eigen::VectorXd integral;  ///< integral state for the next step
};

/// i_c = clamp(Kp e + Kd de + I, +-saturation); I advances by Ki e dt,
/// clamped to +-windup and frozen while the output is saturated in the
/// direction of the error.
ControllerOutput controller(const Eigen::VectorXd& q_ref,
                            const Eigen::VectorXd& dq_ref,
                            const Eigen::VectorXd& q, const Eigen::VectorXd& dq,
                            const Eigen::VectorXd& integral,
                            const ControllerParams& params, double dt);

/// Complete simulated manipulator.
struct Plant {
  DynamicParams arm;
  MotorParams motor;
  FrictionParams friction;
  ControllerParams control;

  /// Default desk-scale planar 2R plant.
  static Plant planar2r_default();

  int dof() const { return arm.dof(); }
  void validate() const;

  /// M_eq(q) = M(q) + K_r^2 J_m.
  Eigen::MatrixXd equivalent_mass_matrix(const Eigen::VectorXd& q) const;
};

}  // namespace gpcd::sim

#endif  // GPCD_SIM_PLANT_HPP_
