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

#include "gpcd/sim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "gpcd/errors.hpp"

namespace gpcd::sim {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kMaxCondition = 1e12;

void check_condition(const MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(M, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  const double cond = lo > 0.0 ? hi / lo : INFINITY;
  if (!(cond < kMaxCondition)) {
    std::ostringstream os;
    os << "equivalent mass matrix is ill-conditioned (condition number " << cond << ")";
    throw IllConditionedError(os.str(), cond);
  }
}

// Torque on each joint before friction.
VectorXd drive_torque(const Plant& plant, const VectorXd& q, const VectorXd& dq,
                      const VectorXd& current, const VectorXd& tau_ext) {
  const int n = plant.dof();
  VectorXd b = tau_ext - coriolis_matrix(plant.arm, q, dq) * dq -
               gravity_torque(plant.arm, q);
  for (int j = 0; j < n; ++j) {
    b[j] += plant.motor.current_gain(j) * current[j] -
            plant.motor.equivalent_damping(j) * dq[j];
  }
  return b;
}

bool all_finite(const VectorXd& v) { return v.allFinite(); }

}  // namespace

JointSample JointSample::zero(int dof) {
  JointSample s;
  const VectorXd z = VectorXd::Zero(dof);
  s.q = s.dq = s.ddq = s.q_ref = s.dq_ref = s.e_q = s.de_q = z;
  s.i_cmd = s.i_meas = s.tau_ext = z;
  s.stuck.assign(dof, false);
  return s;
}

void SimConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  if (!(current_noise_std >= 0.0 && disturbance_std >= 0.0)) {
    throw std::invalid_argument("noise standard deviations must be >= 0");
  }
  if (!(stiction_band > 0.0)) throw std::invalid_argument("stiction band must be > 0");
}

DynamicsResult forward_dynamics(const Plant& plant, const VectorXd& q,
                                const VectorXd& dq, const VectorXd& current,
                                const VectorXd& tau_ext, double stiction_band) {
  const int n = plant.dof();
  if (q.size() != n || dq.size() != n || current.size() != n || tau_ext.size() != n) {
    throw DimensionError("forward_dynamics: state vectors must have one entry per joint");
  }
  const MatrixXd M = plant.equivalent_mass_matrix(q);
  check_condition(M);

  // held[j]: candidate for stiction; breakaway[j]: left the band this step.
  std::vector<bool> held(n), breakaway(n, false);
  VectorXd applied = VectorXd::Zero(n);
  for (int j = 0; j < n; ++j) held[j] = std::abs(dq[j]) < stiction_band;

  DynamicsResult r;
  for (;;) {
    VectorXd v = dq;
    for (int j = 0; j < n; ++j) {
      if (held[j]) v[j] = 0.0;
    }
    const VectorXd b = drive_torque(plant, q, v, current, tau_ext);

    VectorXd friction = VectorXd::Zero(n);
    std::vector<int> free_idx, held_idx;
    for (int j = 0; j < n; ++j) {
      if (held[j]) {
        held_idx.push_back(j);
      } else {
        free_idx.push_back(j);
        friction[j] = friction_torque(v[j], breakaway[j] ? applied[j] : 0.0,
                                      plant.friction.joints[j], stiction_band);
      }
    }

    VectorXd ddq = VectorXd::Zero(n);
    if (!free_idx.empty()) {
      const int nf = static_cast<int>(free_idx.size());
      MatrixXd Mff(nf, nf);
      VectorXd rhs(nf);
      for (int a = 0; a < nf; ++a) {
        rhs[a] = b[free_idx[a]] - friction[free_idx[a]];
        for (int c = 0; c < nf; ++c) Mff(a, c) = M(free_idx[a], free_idx[c]);
      }
      const VectorXd af = Mff.llt().solve(rhs);
      for (int a = 0; a < nf; ++a) ddq[free_idx[a]] = af[a];
    }

    // Torque the friction must supply to keep each held joint at rest.
    int worst = -1;
    double worst_excess = 0.0;
    for (int j : held_idx) {
      const double hold = b[j] - M.row(j).dot(ddq);
      applied[j] = hold;
      const double excess = std::abs(hold) - plant.friction.joints[j].static_coeff;
      if (excess > worst_excess) {
        worst_excess = excess;
        worst = j;
      }
    }
    if (worst >= 0) {
      held[worst] = false;
      breakaway[worst] = true;
      continue;
    }

    for (int j : held_idx) {
      friction[j] = friction_torque(0.0, applied[j], plant.friction.joints[j],
                                    stiction_band);
    }
    r.ddq = ddq;
    r.dq = v;
    r.friction = friction;
    r.stuck = held;
    return r;
  }
}

VectorXd implied_friction(const Plant& plant, const JointSample& s) {
  const VectorXd b = drive_torque(plant, s.q, s.dq, s.i_cmd, s.tau_ext);
  return b - plant.equivalent_mass_matrix(s.q) * s.ddq;
}

Simulator::Simulator(Plant plant, SimConfig config)
    : plant_(std::move(plant)),
      config_(config),
      sensor_rng_(Rng(config.seed).derive("current-sensor")),
      disturbance_rng_(Rng(config.seed).derive("disturbance")) {
  plant_.validate();
  config_.validate();
  reset(VectorXd::Zero(plant_.dof()));
}

void Simulator::reset(const VectorXd& q0, double t0) {
  const int n = plant_.dof();
  if (q0.size() != n) throw DimensionError("reset: q0 must have one entry per joint");
  state_.t = t0;
  state_.q = q0;
  state_.dq = VectorXd::Zero(n);
  const VectorXd g = gravity_torque(plant_.arm, q0);
  state_.integral.resize(n);
  for (int j = 0; j < n; ++j) {
    const double w = plant_.control.windup[j];
    state_.integral[j] = std::clamp(g[j] / plant_.motor.current_gain(j), -w, w);
  }
  has_previous_ = false;
}

void Simulator::set_state(SimState state) {
  const int n = plant_.dof();
  if (state.q.size() != n || state.dq.size() != n || state.integral.size() != n) {
    throw DimensionError("set_state: state vectors must have one entry per joint");
  }
  state_ = std::move(state);
  has_previous_ = false;
}

JointSample Simulator::step(const VectorXd& q_ref, const VectorXd& dq_ref,
                            const VectorXd& tau_ext) {
  const int n = plant_.dof();
  const double dt = config_.dt;
  if (q_ref.size() != n || dq_ref.size() != n || tau_ext.size() != n) {
    throw DimensionError("step: reference vectors must have one entry per joint");
  }

  const ControllerOutput ctrl =
      controller(q_ref, dq_ref, state_.q, state_.dq, state_.integral, plant_.control, dt);

  VectorXd disturbance = tau_ext;
  if (config_.disturbance_std > 0.0) {
    for (int j = 0; j < n; ++j) disturbance[j] += disturbance_rng_.normal(0.0, config_.disturbance_std);
  }
  const DynamicsResult fd = forward_dynamics(plant_, state_.q, state_.dq, ctrl.current,
                                             disturbance, config_.stiction_band);

  JointSample s;
  s.t = state_.t;
  s.q = state_.q;
  s.dq = fd.dq;
  s.ddq = fd.ddq;
  if (config_.differenced_acceleration) {
    s.ddq = has_previous_ ? VectorXd((fd.dq - previous_dq_) / dt) : VectorXd::Zero(n);
  }
  s.q_ref = q_ref;
  s.dq_ref = dq_ref;
  s.e_q = q_ref - s.q;
  s.de_q = dq_ref - s.dq;
  s.i_cmd = ctrl.current;
  s.i_meas = ctrl.current;
  if (config_.current_noise_std > 0.0) {
    for (int j = 0; j < n; ++j) s.i_meas[j] += sensor_rng_.normal(0.0, config_.current_noise_std);
  }
  s.tau_ext = tau_ext;
  s.stuck = fd.stuck;

  previous_dq_ = fd.dq;
  has_previous_ = true;
  state_.dq = fd.dq + dt * fd.ddq;
  state_.q = state_.q + dt * state_.dq;
  state_.integral = ctrl.integral;
  state_.t += dt;

  if (!all_finite(state_.q) || !all_finite(state_.dq) || !all_finite(state_.integral)) {
    std::ostringstream os;
    os << "simulation state became non-finite at t = " << state_.t;
    throw NonFiniteStateError(os.str());
  }
  return s;
}

}  // namespace gpcd::sim
