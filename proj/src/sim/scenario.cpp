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

#include "gpcd/sim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "gpcd/errors.hpp"
#include "gpcd/rng.hpp"

namespace gpcd::sim {

using Eigen::VectorXd;

namespace {

constexpr double kPi = std::numbers::pi;

// Minimum-jerk profile s(u), u in [0,1], and its derivative.
double min_jerk(double u) { return u * u * u * (10.0 + u * (-15.0 + 6.0 * u)); }
double min_jerk_rate(double u) { return 30.0 * u * u * (1.0 - u) * (1.0 - u); }

}  // namespace

struct ReferencePlan::Segment {
  enum class Kind { kHold, kMove, kCircle };
  Kind kind = Kind::kHold;
  double t0 = 0.0, duration = 0.0;
  VectorXd q0, q1;
  // Circle parameters.
  Kinematics kin;
  double cx = 0.0, cy = 0.0, radius = 0.0, omega = 0.0, ramp = 0.0, angle0 = 0.0;
  int elbow = 1;

  // Angle travelled and angular rate along the circle.
  void circle_phase(double tau, double& phi, double& rate) const {
    const double T = duration;
    const double r = ramp;
    if (r <= 0.0) {
      phi = omega * tau;
      rate = omega;
      return;
    }
    auto up = [&](double s) { return omega * (s / 2.0 - r / (2.0 * kPi) * std::sin(kPi * s / r)); };
    if (tau < r) {
      phi = up(tau);
      rate = omega * 0.5 * (1.0 - std::cos(kPi * tau / r));
    } else if (tau <= T - r) {
      phi = omega * (r / 2.0 + (tau - r));
      rate = omega;
    } else {
      const double s = T - tau;
      const double total = omega * (T - r);
      phi = total - up(s);
      rate = omega * 0.5 * (1.0 - std::cos(kPi * s / r));
    }
  }

  void sample(double t, VectorXd& q, VectorXd& dq) const {
    const double tau = std::clamp(t - t0, 0.0, duration);
    switch (kind) {
      case Kind::kHold:
        q = q0;
        dq = VectorXd::Zero(q0.size());
        return;
      case Kind::kMove: {
        const double u = duration > 0.0 ? tau / duration : 1.0;
        q = q0 + (q1 - q0) * min_jerk(u);
        dq = duration > 0.0 ? VectorXd((q1 - q0) * (min_jerk_rate(u) / duration))
                            : VectorXd::Zero(q0.size());
        return;
      }
      case Kind::kCircle: {
        double phi, rate;
        circle_phase(tau, phi, rate);
        const double a = angle0 + phi;
        const double x = cx + radius * std::cos(a);
        const double y = cy + radius * std::sin(a);
        const Eigen::Vector2d qq = inverse_kinematics_2r(kin, x, y, elbow);
        q = qq;
        const Eigen::Vector2d xd(-radius * rate * std::sin(a), radius * rate * std::cos(a));
        const Eigen::MatrixXd J = tool_jacobian(kin, q);
        dq = J.partialPivLu().solve(xd);
        return;
      }
    }
  }
};

ReferencePlan::ReferencePlan() = default;
ReferencePlan::ReferencePlan(const ReferencePlan&) = default;
ReferencePlan& ReferencePlan::operator=(ReferencePlan other) {
  segments_ = std::move(other.segments_);
  windows_ = std::move(other.windows_);
  return *this;
}
ReferencePlan::~ReferencePlan() = default;

double ReferencePlan::duration() const {
  if (segments_.empty()) return 0.0;
  const auto& s = segments_.back();
  return s.t0 + s.duration;
}

void ReferencePlan::sample(double t, VectorXd& q, VectorXd& dq) const {
  if (segments_.empty()) throw std::logic_error("empty reference plan");
  // Segments are contiguous and sorted; binary search on start time.
  auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                             [](double v, const Segment& s) { return v < s.t0; });
  if (it != segments_.begin()) --it;
  it->sample(t, q, dq);
  if (t > it->t0 + it->duration) dq.setZero();
}

Eigen::Vector2d inverse_kinematics_2r(const Kinematics& kin, double x, double y,
                                      int elbow) {
  if (kin.dof() != 2) throw std::invalid_argument("2R inverse kinematics needs two links");
  const double l1 = kin.lengths[0], l2 = kin.lengths[1];
  const double r2 = x * x + y * y;
  const double c2 = (r2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
  if (!(c2 >= -1.0 && c2 <= 1.0)) {
    std::ostringstream os;
    os << "target (" << x << ", " << y << ") is outside the reachable workspace";
    throw UnreachableTargetError(os.str(), x, y);
  }
  const double q2 = (elbow >= 0 ? 1.0 : -1.0) * std::acos(c2);
  const double q1 = std::atan2(y, x) - std::atan2(l2 * std::sin(q2), l1 + l2 * std::cos(q2));
  return {q1, q2};
}

ReferencePlan ReferencePlan::build(const Kinematics& kin, const Scenario& scenario,
                                   std::uint64_t seed) {
  const int n = kin.dof();
  ReferencePlan plan;
  Rng rng = Rng(seed).derive("reference:" + scenario.name);
  VectorXd pose = scenario.home.size() == n ? scenario.home : VectorXd::Zero(n);
  double t = 0.0;

  auto hold = [&](double duration, int phase, const char* kind) {
    Segment s;
    s.kind = Segment::Kind::kHold;
    s.t0 = t;
    s.duration = duration;
    s.q0 = pose;
    plan.segments_.push_back(s);
    plan.windows_.push_back({kind, phase, t, t + duration, pose});
    t += duration;
  };
  auto move = [&](const VectorXd& target, double duration, int phase) {
    Segment s;
    s.kind = Segment::Kind::kMove;
    s.t0 = t;
    s.duration = duration;
    s.q0 = pose;
    s.q1 = target;
    plan.segments_.push_back(s);
    plan.windows_.push_back({"move", phase, t, t + duration, target});
    t += duration;
    pose = target;
  };

  for (std::size_t p = 0; p < scenario.phases.size(); ++p) {
    const int phase = static_cast<int>(p);
    const Phase& ph = scenario.phases[p];
    if (const auto* w = std::get_if<WaypointsPhase>(&ph)) {
      if (n != 2) throw std::invalid_argument("Cartesian waypoints need a 2R arm");
      for (int k = 0; k < w->count; ++k) {
        const double r = rng.uniform(w->radius_min, w->radius_max);
        const double a = rng.uniform(w->angle_min, w->angle_max);
        const int elbow = rng.uniform() < 0.5 ? 1 : -1;
        const VectorXd target =
            inverse_kinematics_2r(kin, r * std::cos(a), r * std::sin(a), elbow);
        const double span = (target - pose).cwiseAbs().maxCoeff();
        move(target, std::max(w->min_move_time, span / w->joint_speed), phase);
        hold(rng.uniform(w->dwell_min, w->dwell_max), phase, "rest");
      }
    } else if (const auto* c = std::get_if<CirclePhase>(&ph)) {
      if (n != 2) throw std::invalid_argument("circle tracking needs a 2R arm");
      if (!(c->radius > 0.0 && c->speed > 0.0 && c->laps > 0.0)) {
        throw std::invalid_argument("circle radius, speed and laps must be > 0");
      }
      const double x0 = c->center_x + c->radius * std::cos(c->start_angle);
      const double y0 = c->center_y + c->radius * std::sin(c->start_angle);
      const VectorXd start = inverse_kinematics_2r(kin, x0, y0, c->elbow);
      move(start, c->approach_time, phase);
      // Reject circles that leave the workspace anywhere along the path.
      for (int k = 0; k < 64; ++k) {
        const double a = c->start_angle + 2.0 * kPi * k / 64.0;
        inverse_kinematics_2r(kin, c->center_x + c->radius * std::cos(a),
                              c->center_y + c->radius * std::sin(a), c->elbow);
      }
      Segment s;
      s.kind = Segment::Kind::kCircle;
      s.kin = kin;
      s.cx = c->center_x;
      s.cy = c->center_y;
      s.radius = c->radius;
      s.omega = c->speed / c->radius;
      s.ramp = c->ramp;
      s.angle0 = c->start_angle;
      s.elbow = c->elbow;
      s.t0 = t;
      s.duration = 2.0 * kPi * c->laps / s.omega + c->ramp;
      plan.segments_.push_back(s);
      plan.windows_.push_back({"circle", phase, t, t + s.duration, VectorXd()});
      t += s.duration;
      VectorXd dq;
      s.sample(t, pose, dq);
    } else if (const auto* r = std::get_if<RestMovePhase>(&ph)) {
      if (r->joint < 0 || r->joint >= n) throw DimensionError("rest-move joint out of range");
      for (int cyc = 0; cyc < r->cycles; ++cyc) {
        for (double target_angle : r->poses) {
          VectorXd target = pose;
          target[r->joint] = target_angle;
          move(target, r->move_time, phase);
          hold(r->dwell, phase, "rest");
        }
      }
    } else if (const auto* h = std::get_if<HoldPhase>(&ph)) {
      hold(h->duration, phase, "rest");
    }
  }
  if (t < scenario.min_duration) {
    hold(scenario.min_duration - t, static_cast<int>(scenario.phases.size()), "rest");
  }
  if (plan.segments_.empty()) hold(0.0, 0, "rest");
  return plan;
}

double raised_cosine(double t, double start, double duration, double amplitude) {
  if (t < start || t > start + duration || duration <= 0.0) return 0.0;
  return amplitude * 0.5 * (1.0 - std::cos(2.0 * kPi * (t - start) / duration));
}

bool Trajectory::in_episode(double t) const {
  for (const auto& e : episodes) {
    if (t >= e.start && t <= e.end) return true;
  }
  return false;
}

Scenario random_waypoints_scenario(int count) {
  Scenario s;
  s.name = "random-waypoints";
  s.home = Eigen::Vector2d(1.2, 0.8);
  WaypointsPhase w;
  w.count = count;
  s.phases.push_back(w);
  return s;
}

Scenario circle_track_scenario(double radius, double speed) {
  Scenario s;
  s.name = "circle-track";
  s.home = Eigen::Vector2d(1.2, 0.8);
  CirclePhase c;
  c.radius = radius;
  c.speed = speed;
  s.phases.push_back(c);
  s.phases.push_back(HoldPhase{2.0});
  return s;
}

Scenario rest_move_cycle_scenario(int joint, std::vector<double> poses,
                                  Eigen::VectorXd home, int cycles) {
  Scenario s;
  s.name = "rest-move-cycle";
  s.home = std::move(home);
  RestMovePhase r;
  r.joint = joint;
  r.poses = std::move(poses);
  r.cycles = cycles;
  s.phases.push_back(r);
  return s;
}

Scenario collision_episodes_scenario(int joint, double amplitude, double duration) {
  Scenario s;
  s.name = "collision-episodes";
  s.home = Eigen::Vector2d(1.2, 0.8);
  CirclePhase c;
  s.phases.push_back(c);
  s.phases.push_back(HoldPhase{20.0});
  // Circle tracking starts after the approach move.
  const double track = c.approach_time;
  s.pulses.push_back({joint, 0, track + 3.0, duration, amplitude});
  s.pulses.push_back({joint, 0, track + 8.0, duration, -amplitude});
  s.pulses.push_back({joint, 1, 5.0, duration, amplitude});
  s.pulses.push_back({joint, 1, 12.0, duration, -amplitude});
  return s;
}

Dataset generate_dataset(const Plant& plant, const SimConfig& config,
                         const Scenario& scenario, std::uint64_t seed) {
  const int n = plant.dof();
  if (scenario.trajectories < 1) throw std::invalid_argument("scenario needs >= 1 trajectory");
  Dataset out;
  for (int rep = 0; rep < scenario.trajectories; ++rep) {
    const std::uint64_t traj_seed =
        scenario.trajectories == 1 ? seed : Rng::mix(seed + 0x1000003ULL * (rep + 1));
    const ReferencePlan plan = ReferencePlan::build(plant.arm.kinematics(), scenario, traj_seed);

    Trajectory traj;
    traj.name = scenario.trajectories == 1 ? scenario.name
                                           : scenario.name + "-" + std::to_string(rep);
    traj.seed = traj_seed;
    traj.windows = plan.windows();

    // Resolve pulse placement against the phase windows.
    std::vector<double> phase_start(scenario.phases.size() + 1, plan.duration());
    for (auto it = traj.windows.rbegin(); it != traj.windows.rend(); ++it) {
      if (it->phase >= 0 && it->phase < static_cast<int>(phase_start.size())) {
        phase_start[it->phase] = it->start;
      }
    }
    for (const auto& p : scenario.pulses) {
      if (p.joint < 0 || p.joint >= n) throw DimensionError("pulse joint out of range");
      if (p.phase < 0 || p.phase >= static_cast<int>(scenario.phases.size())) {
        throw std::invalid_argument("pulse refers to an unknown phase");
      }
      const double start = phase_start[p.phase] + p.offset;
      traj.episodes.push_back({p.joint, start, start + p.duration, p.amplitude});
    }

    SimConfig cfg = config;
    cfg.seed = Rng::mix(traj_seed ^ 0x5eedULL);
    Simulator sim(plant, cfg);
    VectorXd q_ref, dq_ref;
    plan.sample(0.0, q_ref, dq_ref);
    sim.reset(q_ref);

    const auto steps = static_cast<long>(std::floor(plan.duration() / cfg.dt + 1e-9)) + 1;
    traj.samples.reserve(steps);
    VectorXd tau_ext(n);
    for (long k = 0; k < steps; ++k) {
      const double t = k * cfg.dt;
      plan.sample(t, q_ref, dq_ref);
      tau_ext.setZero();
      for (const auto& e : traj.episodes) {
        tau_ext[e.joint] += raised_cosine(t, e.start, e.end - e.start, e.amplitude);
      }
      JointSample s = sim.step(q_ref, dq_ref, tau_ext);
      s.t = t;
      traj.samples.push_back(std::move(s));
    }
    out.push_back(std::move(traj));
  }
  return out;
}

VectorXd friction_share(const Plant& plant, const Dataset& data) {
  const int n = plant.dof();
  VectorXd fric = VectorXd::Zero(n), motor = VectorXd::Zero(n);
  for (const auto& traj : data) {
    for (const auto& s : traj.samples) {
      const VectorXd f = implied_friction(plant, s);
      for (int j = 0; j < n; ++j) {
        const double tm = plant.motor.current_gain(j) * s.i_cmd[j];
        fric[j] += f[j] * f[j];
        motor[j] += tm * tm;
      }
    }
  }
  VectorXd share(n);
  for (int j = 0; j < n; ++j) share[j] = motor[j] > 0.0 ? std::sqrt(fric[j] / motor[j]) : 0.0;
  return share;
}

std::vector<double> plateau_currents(const Trajectory& traj, int joint, double pose,
                                     double tol) {
  std::vector<double> out;
  for (const auto& w : traj.windows) {
    if (w.kind != "rest" || w.pose.size() <= joint) continue;
    if (std::abs(w.pose[joint] - pose) > tol) continue;
    const double from = 0.5 * (w.start + w.end);
    double sum = 0.0;
    int count = 0;
    for (const auto& s : traj.samples) {
      if (s.t >= from && s.t <= w.end) {
        sum += s.i_meas[joint];
        ++count;
      }
    }
    if (count > 0) out.push_back(sum / count);
  }
  return out;
}

}  // namespace gpcd::sim
