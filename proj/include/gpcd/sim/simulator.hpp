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

#ifndef GPCD_SIM_SIMULATOR_HPP_
#define GPCD_SIM_SIMULATOR_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "gpcd/rng.hpp"
#include "gpcd/sim/plant.hpp"

namespace gpcd::sim {

/// One logged time step. All vectors have one entry per joint.
struct JointSample {
  double t = 0.0;
  Eigen::VectorXd q, dq, ddq;
  Eigen::VectorXd q_ref, dq_ref;
  Eigen::VectorXd e_q, de_q;  ///< q_ref - q and dq_ref - dq, exactly
  Eigen::VectorXd i_cmd;      ///< current requested by the controller
  Eigen::VectorXd i_meas;     ///< i_cmd plus sensor noise
  Eigen::VectorXd tau_ext;    ///< ground-truth external torque
  std::vector<bool> stuck;    ///< joint held by stiction during this step

  int dof() const { return static_cast<int>(q.size()); }
  static JointSample zero(int dof);
};

struct SimConfig {
  double dt = 8e-3;                  ///< s
  double current_noise_std = 5e-3;   ///< A
  double disturbance_std = 0.0;      ///< N m, unmodeled joint torque
  double stiction_band = 1e-2;       ///< rad/s, velocity band of the stiction branch
  std::uint64_t seed = 0;
  /// Log backward-differenced velocities as ddq instead of the exact value.
  bool differenced_acceleration = false;

  void validate() const;
};

struct DynamicsResult {
  Eigen::VectorXd ddq;
  Eigen::VectorXd dq;        ///< velocity with stuck joints pinned to zero
  Eigen::VectorXd friction;  ///< friction torque, opposing sign convention
  std::vector<bool> stuck;
};

/// Solve M_eq qdd = K_eq i - C dq - tau_g - tau_f - B_eq dq + tau_ext.
///
/// Joints inside the stiction band whose holding torque stays within F_s are
/// held: their velocity and acceleration are exactly zero and their friction
/// equals the holding torque. `extra_torque` is added to tau_ext (used for
/// disturbance injection). Throws IllConditionedError when M_eq is singular.
DynamicsResult forward_dynamics(const Plant& plant, const Eigen::VectorXd& q,
                                const Eigen::VectorXd& dq,
                                const Eigen::VectorXd& current,
                                const Eigen::VectorXd& tau_ext,
                                double stiction_band);

/// Motor torque balance for a logged sample, (K_eq i_c - M_eq qdd - C dq -
/// tau_g - B_eq dq + tau_ext): the friction torque that was acting.
Eigen::VectorXd implied_friction(const Plant& plant, const JointSample& s);

struct SimState {
  double t = 0.0;
  Eigen::VectorXd q, dq;
  Eigen::VectorXd integral;  ///< controller integral contribution, A
};

/// Semi-implicit Euler integration of the plant under the PID controller.
class Simulator {
 public:
  Simulator(Plant plant, SimConfig config);

  /// Start at rest at `q0`. The integral state is preloaded with the gravity
  /// current so the arm starts without a transient.
  void reset(const Eigen::VectorXd& q0, double t0 = 0.0);
  void set_state(SimState state);

  /// Advance one step. The controller is evaluated on the current state,
  /// then the dynamics; the returned sample describes the step's start.
  JointSample step(const Eigen::VectorXd& q_ref, const Eigen::VectorXd& dq_ref,
                   const Eigen::VectorXd& tau_ext);

  const SimState& state() const { return state_; }
  const Plant& plant() const { return plant_; }
  const SimConfig& config() const { return config_; }

 private:
  Plant plant_;
  SimConfig config_;
  SimState state_;
  Rng sensor_rng_;
  Rng disturbance_rng_;
  Eigen::VectorXd previous_dq_;
  bool has_previous_ = false;
};

}  // namespace gpcd::sim

#endif  // GPCD_SIM_SIMULATOR_HPP_
