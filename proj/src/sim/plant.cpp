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

#include "gpcd/sim/plant.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gpcd::sim {

namespace {

void require_size(std::size_t got, int n, const char* what) {
  if (static_cast<int>(got) != n) {
    throw std::invalid_argument(std::string(what) + ": expected one entry per joint");
  }
}

}  // namespace

MotorParams MotorParams::uniform(int dof, double rotor_inertia, double damping,
                                 double torque_constant, double gear_ratio) {
  MotorParams m;
  m.rotor_inertia.assign(dof, rotor_inertia);
  m.damping.assign(dof, damping);
  m.torque_constant.assign(dof, torque_constant);
  m.gear_ratio.assign(dof, gear_ratio);
  return m;
}

void MotorParams::validate() const {
  const int n = dof();
  require_size(damping.size(), n, "motor damping");
  require_size(torque_constant.size(), n, "torque constant");
  require_size(gear_ratio.size(), n, "gear ratio");
  for (int j = 0; j < n; ++j) {
    if (!(rotor_inertia[j] > 0.0 && damping[j] > 0.0 && torque_constant[j] > 0.0 &&
          gear_ratio[j] > 0.0)) {
      throw std::invalid_argument("motor parameters must be > 0");
    }
  }
}

void JointFriction::validate() const {
  if (!(kinetic_coeff >= 0.0 && static_coeff >= kinetic_coeff && viscous_coeff >= 0.0)) {
    throw std::invalid_argument("friction requires F_s >= F_k >= 0 and F_v >= 0");
  }
}

FrictionParams FrictionParams::uniform(int dof, JointFriction f) {
  FrictionParams p;
  p.joints.assign(dof, f);
  return p;
}

void FrictionParams::validate() const {
  for (const auto& j : joints) j.validate();
}

double friction_torque(double velocity, double applied_torque,
                       const JointFriction& f, double band) {
  if (std::abs(velocity) < band) {
    if (std::abs(applied_torque) <= f.static_coeff) return applied_torque;
    return f.kinetic_coeff * signum(applied_torque);
  }
  return f.kinetic_coeff * signum(velocity) + f.viscous_coeff * velocity;
}

ControllerParams ControllerParams::uniform(int dof, double kp, double kd,
                                           double ki, double saturation,
                                           double windup) {
  ControllerParams c;
  c.kp.assign(dof, kp);
  c.kd.assign(dof, kd);
  c.ki.assign(dof, ki);
  c.saturation.assign(dof, saturation);
  c.windup.assign(dof, windup);
  return c;
}

void ControllerParams::validate() const {
  const int n = dof();
  require_size(kd.size(), n, "kd");
  require_size(ki.size(), n, "ki");
  require_size(saturation.size(), n, "saturation");
  require_size(windup.size(), n, "windup");
  for (int j = 0; j < n; ++j) {
    if (!(kp[j] >= 0.0 && kd[j] >= 0.0 && ki[j] >= 0.0)) {
      throw std::invalid_argument("controller gains must be >= 0");
    }
    if (!(saturation[j] > 0.0)) throw std::invalid_argument("saturation must be > 0");
    if (!(windup[j] >= 0.0)) throw std::invalid_argument("windup clamp must be >= 0");
  }
}

ControllerOutput controller(const Eigen::VectorXd& q_ref,
                            const Eigen::VectorXd& dq_ref,
                            const Eigen::VectorXd& q, const Eigen::VectorXd& dq,
                            const Eigen::VectorXd& integral,
                            const ControllerParams& params, double dt) {
  const int n = params.dof();
  ControllerOutput out{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (int j = 0; j < n; ++j) {
    const double e = q_ref[j] - q[j];
    const double de = dq_ref[j] - dq[j];
    const double raw = params.kp[j] * e + params.kd[j] * de + integral[j];
    const double sat = params.saturation[j];
    const double ic = std::clamp(raw, -sat, sat);
    out.current[j] = ic;
    double next = integral[j];
    const bool saturated = raw != ic;
    if (!saturated || signum(e) != signum(raw)) next += params.ki[j] * e * dt;
    out.integral[j] = std::clamp(next, -params.windup[j], params.windup[j]);
  }
  return out;
}

Plant Plant::planar2r_default() {
  Plant p;
  p.arm = DynamicParams::planar2r_default();
  p.motor = MotorParams::uniform(2, 1e-4, 1e-4, 0.1, 100.0);
  p.friction = FrictionParams::uniform(2, {0.6, 0.4, 0.3});
  p.control = ControllerParams::uniform(2, 50.0, 4.0, 100.0, 2.5, 2.0);
  return p;
}

void Plant::validate() const {
  arm.validate();
  motor.validate();
  friction.validate();
  control.validate();
  const int n = dof();
  if (motor.dof() != n || friction.dof() != n || control.dof() != n) {
    throw std::invalid_argument("plant components disagree on the number of joints");
  }
}

Eigen::MatrixXd Plant::equivalent_mass_matrix(const Eigen::VectorXd& q) const {
  Eigen::MatrixXd M = mass_matrix(arm, q);
  for (int j = 0; j < dof(); ++j) M(j, j) += motor.reflected_inertia(j);
  return M;
}

}  // namespace gpcd::sim
