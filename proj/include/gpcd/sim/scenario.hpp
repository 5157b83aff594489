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

#ifndef GPCD_SIM_SCENARIO_HPP_
#define GPCD_SIM_SCENARIO_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "gpcd/sim/simulator.hpp"

namespace gpcd::sim {

// ---------------------------------------------------------------------------
// Scenario description
// ---------------------------------------------------------------------------

/// Reach `count` random Cartesian targets in an annular sector above the
/// base, resting at each one.
struct WaypointsPhase {
  int count = 10;
  double radius_min = 0.35, radius_max = 0.9;  ///< m
  double angle_min = 0.3, angle_max = 2.84;    ///< rad, polar angle of target
  double dwell_min = 1.0, dwell_max = 2.0;     ///< s
  double joint_speed = 0.8;                    ///< rad/s, average on the longest joint
  double min_move_time = 1.0;                  ///< s
};

/// Track a circle at constant tool speed, with smooth speed ramps.
struct CirclePhase {
  double center_x = 0.0, center_y = 0.55;  ///< m
  double radius = 0.2;                     ///< m
  double speed = 0.1;                      ///< m/s
  double laps = 1.0;
  double start_angle = 0.0;  ///< rad, position on the circle at start
  int elbow = 1;             ///< +1 or -1, IK branch
  double ramp = 0.5;         ///< s, speed ramp at both ends
  double approach_time = 2.0;  ///< s, joint move to the start point
};

/// Move only `joint` through a fixed list of rest poses; the other joints
/// keep the pose they entered with.
struct RestMovePhase {
  int joint = 0;
  std::vector<double> poses;  ///< rad
  double dwell = 3.0;         ///< s at each pose
  double move_time = 2.0;     ///< s per move
  int cycles = 1;
};

struct HoldPhase {
  double duration = 1.0;  ///< s
};

using Phase = std::variant<WaypointsPhase, CirclePhase, RestMovePhase, HoldPhase>;

/// Raised-cosine external torque pulse on one joint, placed at `offset`
/// seconds after the start of phase `phase`.
struct PulseSpec {
  int joint = 0;
  int phase = 0;
  double offset = 0.0;     ///< s
  double duration = 1.0;   ///< s
  double amplitude = 3.0;  ///< N m, peak
};

struct Scenario {
  std::string name = "scenario";
  Eigen::VectorXd home;  ///< initial pose; defaults to zeros when empty
  std::vector<Phase> phases;
  std::vector<PulseSpec> pulses;
  double min_duration = 0.0;  ///< pad with a final hold up to this length
  int trajectories = 1;       ///< independent repetitions with derived seeds
};

// Convenience constructors for the standard experiment scenarios.
Scenario random_waypoints_scenario(int count);
Scenario circle_track_scenario(double radius, double speed);
/// Joint `joint` cycles through `poses`; the other joints stay at `home`.
Scenario rest_move_cycle_scenario(int joint, std::vector<double> poses,
                                  Eigen::VectorXd home, int cycles = 1);
/// Circle tracking then a long rest, with two pushes on `joint` during the
/// motion and two during the rest.
Scenario collision_episodes_scenario(int joint, double amplitude, double duration);

// ---------------------------------------------------------------------------
// Generated data
// ---------------------------------------------------------------------------

/// Ground-truth interval during which an external torque acts.
struct Episode {
  int joint = 0;
  double start = 0.0, end = 0.0;
  double amplitude = 0.0;
};

/// Time span covered by one phase (or one dwell inside a phase).
struct PhaseWindow {
  std::string kind;  ///< "move", "rest", "circle"
  int phase = 0;
  double start = 0.0, end = 0.0;
  Eigen::VectorXd pose;  ///< reference pose for rests
};

struct Trajectory {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<JointSample> samples;
  std::vector<Episode> episodes;
  std::vector<PhaseWindow> windows;

  /// True when t lies inside a ground-truth episode.
  bool in_episode(double t) const;
};

using Dataset = std::vector<Trajectory>;

/// Piecewise joint reference built from a scenario.
class ReferencePlan {
 public:
  struct Segment;

  ReferencePlan();
  ReferencePlan(const ReferencePlan&);
  ReferencePlan& operator=(ReferencePlan);
  ~ReferencePlan();

  /// Reference position and velocity at time t (held at the final pose
  /// past the end).
  void sample(double t, Eigen::VectorXd& q, Eigen::VectorXd& dq) const;
  double duration() const;
  const std::vector<PhaseWindow>& windows() const { return windows_; }

  /// Expand a scenario. Throws UnreachableTargetError for Cartesian targets
  /// outside the workspace.
  static ReferencePlan build(const Kinematics& kin, const Scenario& scenario,
                             std::uint64_t seed);

 private:
  std::vector<Segment> segments_;
  std::vector<PhaseWindow> windows_;
};

/// Analytic inverse kinematics of the planar 2R arm. `elbow` = +1 picks
/// q2 >= 0. Throws UnreachableTargetError.
Eigen::Vector2d inverse_kinematics_2r(const Kinematics& kin, double x, double y,
                                      int elbow);

/// Raised-cosine pulse value, zero outside [start, start + duration].
double raised_cosine(double t, double start, double duration, double amplitude);

/// Simulate a scenario. Deterministic in (plant, config, scenario, seed);
/// repetitions use independent derived streams.
Dataset generate_dataset(const Plant& plant, const SimConfig& config,
                         const Scenario& scenario, std::uint64_t seed);

/// RMS of the friction torque over RMS of the motor torque K_eq i_c, per
/// joint, evaluated on logged samples.
Eigen::VectorXd friction_share(const Plant& plant, const Dataset& data);

/// Rest plateaus of `joint` near `pose` (within tol): steady-state mean
/// measured current over the second half of each rest window.
std::vector<double> plateau_currents(const Trajectory& traj, int joint,
                                     double pose, double tol = 1e-6);

}  // namespace gpcd::sim

#endif  // GPCD_SIM_SCENARIO_HPP_
