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

#include "gpcd/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "gpcd/errors.hpp"
#include "gpcd/io.hpp"
#include "gpcd/model_io.hpp"
#include "gpcd/rng.hpp"

namespace gpcd {

namespace fs = std::filesystem;
using Eigen::VectorXd;
using nlohmann::json;

namespace {

std::vector<double> broadcast(const Config& c, const std::string& key,
                              const std::vector<double>& fallback, int dof) {
  std::vector<double> v = c.get_doubles(key, fallback);
  if (v.size() == 1 && dof > 1) v.assign(static_cast<std::size_t>(dof), v[0]);
  if (static_cast<int>(v.size()) != dof) {
    throw FormatError("key '" + key + "' needs 1 or " + std::to_string(dof) + " values, got " +
                      std::to_string(v.size()));
  }
  return v;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + io::format_double(v[i]);
  return out;
}

std::size_t non_negative(const Config& c, const std::string& key, std::size_t fallback) {
  const long v = c.get_int(key, static_cast<long>(fallback));
  if (v < 0) throw FormatError("key '" + key + "' must be non-negative");
  return static_cast<std::size_t>(v);
}

std::string stem_of(Variant v, int joint) {
  return variant_name(v) + "_joint" + std::to_string(joint + 1);
}

/// Read a trajectory, recording both files as inputs of `stage`.
sim::Trajectory load_dataset(const ExperimentConfig& cfg, io::Manifest& m, const std::string& name,
                             const std::string& stage) {
  const fs::path dir = data_dir(cfg);
  if (!fs::exists(dir / (name + ".csv"))) {
    throw CoverageError("dataset '" + name + "' not found under " + dir.string() +
                        "; run simulate first");
  }
  m.record_read(dir / (name + ".csv"), stage);
  m.record_read(dir / (name + ".json"), stage);
  return io::read_trajectory(dir, name);
}

Estimator load_model(const ExperimentConfig& cfg, io::Manifest& m, Variant v, int joint,
                     const std::string& stage) {
  const fs::path p = model_path(cfg, v, joint);
  if (!fs::exists(p)) {
    throw CoverageError("model " + p.string() + " not found; run train first");
  }
  m.record_read(p, stage);
  Estimator est = load_estimator(p);
  if (est.variant != v || est.joint != joint) {
    throw FormatError("model file " + p.string() + " holds a different estimator");
  }
  return est;
}

ThresholdConfig load_thresholds(const ExperimentConfig& cfg, io::Manifest& m,
                                const std::string& stage, Variant& variant) {
  const fs::path p = cfg.out / "thresholds.json";
  if (!fs::exists(p)) throw CoverageError("no calibrated thresholds; run train first");
  m.record_read(p, stage);
  try {
    const json j = json::parse(io::read_file(p));
    if (j.at("format").get<std::string>() != "gpcd-thresholds") {
      throw FormatError("not a thresholds file");
    }
    if (j.at("version").get<int>() != 1) {
      throw VersionMismatchError("unsupported thresholds file version");
    }
    ThresholdConfig th;
    const auto s = j.at("sigma").get<std::vector<double>>();
    th.sigma = Eigen::Map<const VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
    th.rule.quantile = j.at("quantile").get<double>();
    th.rule.margin = j.at("margin").get<double>();
    th.tau = j.at("tau").get<double>();
    th.validate();
    variant = parse_variant(j.at("variant").get<std::string>());
    return th;
  } catch (const json::exception& e) {
    throw FormatError("malformed thresholds file: " + std::string(e.what()));
  }
}

std::vector<Estimator> detector_models(const ExperimentConfig& cfg, io::Manifest& m, Variant v,
                                       const std::string& stage) {
  std::vector<Estimator> out;
  for (int j = 0; j < cfg.dof(); ++j) out.push_back(load_model(cfg, m, v, j, stage));
  return out;
}

void truncate(sim::Trajectory& traj, double duration) {
  const double limit = duration + 1e-9;
  auto it = std::find_if(traj.samples.begin(), traj.samples.end(),
                         [&](const JointSample& s) { return s.t > limit; });
  traj.samples.erase(it, traj.samples.end());
  std::erase_if(traj.windows, [&](const sim::PhaseWindow& w) { return w.start > limit; });
  for (auto& w : traj.windows) w.end = std::min(w.end, duration);
}

std::string loss_csv(const OptimizeResult& r) {
  std::string out = "kind,iteration,loss\n";
  out += "initial,0," + io::format_double(r.initial_loss) + "\n";
  for (std::size_t i = 0; i < r.batch_loss.size(); ++i) {
    out += "batch," + std::to_string(i + 1) + "," + io::format_double(r.batch_loss[i]) + "\n";
  }
  for (std::size_t i = 0; i < r.eval_loss.size(); ++i) {
    out += "eval," + std::to_string(r.eval_iteration[i]) + "," +
           io::format_double(r.eval_loss[i]) + "\n";
  }
  out += "selected," + std::to_string(r.best_iteration) + "," + io::format_double(r.best_loss) +
         "\n";
  return out;
}

std::string nmse_text(double v) { return std::isfinite(v) ? io::format_double(v) : "nan"; }

json event_json(const DetectionEvent& e) {
  std::vector<int> joints;
  for (int j : e.joints) joints.push_back(j + 1);
  std::vector<double> peak(e.peak.data(), e.peak.data() + e.peak.size());
  return {{"start", e.start},
          {"end", e.end},
          {"first", e.first},
          {"last", e.last},
          {"joints", joints},
          {"peak", peak},
          {"latency", e.latency ? json(*e.latency) : json(nullptr)},
          {"episode", e.episode ? json(*e.episode + 1) : json(nullptr)}};
}

struct EventSummary {
  std::size_t events = 0, episodes = 0, matched = 0;
  bool present = false;
};

/// Count events and the distinct ground-truth episodes they overlap.
EventSummary summarize_events(const fs::path& events_file, const fs::path& meta_file,
                              io::Manifest& m) {
  EventSummary out;
  if (!fs::exists(events_file)) return out;
  out.present = true;
  m.record_read(events_file, "report");
  std::istringstream in(io::read_file(events_file));
  std::string line;
  std::set<int> covered;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json e = json::parse(line);
    ++out.events;
    if (!e.at("episode").is_null()) {
      covered.insert(e.at("episode").get<int>());
    }
  }
  if (fs::exists(meta_file)) {
    m.record_read(meta_file, "report");
    const json meta = json::parse(io::read_file(meta_file));
    out.episodes = meta.at("episodes").size();
  }
  out.matched = covered.size();
  return out;
}

}  // namespace

// ---------------------------------------------------------------- config

ExperimentConfig ExperimentConfig::from(const Config& c) {
  ExperimentConfig e;
  e.seed = static_cast<std::uint64_t>(c.get_int("seed", 1));
  e.out = c.get_string("out", e.out.string());
  e.paper_scale = c.get_bool("paper_scale", false);
  if (e.paper_scale) {
    e.train_waypoints = 136;
    e.test_waypoints = 30;
    e.generalization_waypoints = 30;
    e.subset_size = 5000;
  }

  auto& arm = e.plant.arm;
  arm.mass = c.get_doubles("plant.mass", arm.mass);
  const int n = static_cast<int>(arm.mass.size());
  arm.length = broadcast(c, "plant.length", arm.length.size() == arm.mass.size()
                                                ? arm.length
                                                : std::vector<double>{arm.length[0]},
                         n);
  std::vector<double> com(n), inertia(n);
  for (int j = 0; j < n; ++j) {
    com[j] = 0.5 * arm.length[j];
    inertia[j] = arm.mass[j] * arm.length[j] * arm.length[j] / 12.0;
  }
  arm.com = broadcast(c, "plant.com", com, n);
  arm.inertia = broadcast(c, "plant.inertia", inertia, n);
  arm.gravity = c.get_double("plant.gravity", arm.gravity);

  const auto first = [](const std::vector<double>& v) { return std::vector<double>{v[0]}; };
  auto& mo = e.plant.motor;
  mo.rotor_inertia = broadcast(c, "motor.rotor_inertia", first(mo.rotor_inertia), n);
  mo.damping = broadcast(c, "motor.damping", first(mo.damping), n);
  mo.torque_constant = broadcast(c, "motor.torque_constant", first(mo.torque_constant), n);
  mo.gear_ratio = broadcast(c, "motor.gear_ratio", first(mo.gear_ratio), n);

  const auto& f0 = e.plant.friction.joints[0];
  const auto fs_ = broadcast(c, "friction.static", {f0.static_coeff}, n);
  const auto fk = broadcast(c, "friction.kinetic", {f0.kinetic_coeff}, n);
  const auto fv = broadcast(c, "friction.viscous", {f0.viscous_coeff}, n);
  e.plant.friction.joints.resize(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) e.plant.friction.joints[j] = {fs_[j], fk[j], fv[j]};

  auto& ct = e.plant.control;
  ct.kp = broadcast(c, "controller.kp", first(ct.kp), n);
  ct.kd = broadcast(c, "controller.kd", first(ct.kd), n);
  ct.ki = broadcast(c, "controller.ki", first(ct.ki), n);
  ct.saturation = broadcast(c, "controller.saturation", first(ct.saturation), n);
  ct.windup = broadcast(c, "controller.windup", first(ct.windup), n);

  e.sim.dt = c.get_double("sim.dt", e.sim.dt);
  e.sim.current_noise_std = c.get_double("sim.current_noise_std", e.sim.current_noise_std);
  e.sim.disturbance_std = c.get_double("sim.disturbance_std", e.sim.disturbance_std);
  e.sim.stiction_band = c.get_double("sim.stiction_band", e.sim.stiction_band);
  e.sim.differenced_acceleration =
      c.get_bool("sim.differenced_acceleration", e.sim.differenced_acceleration);

  e.train_waypoints = static_cast<int>(c.get_int("data.train_waypoints", e.train_waypoints));
  e.test_waypoints = static_cast<int>(c.get_int("data.test_waypoints", e.test_waypoints));
  e.generalization_waypoints = static_cast<int>(
      c.get_int("data.generalization_waypoints", e.generalization_waypoints));
  e.circle_radius = c.get_double("data.circle_radius", e.circle_radius);
  e.circle_speed = c.get_double("data.circle_speed", e.circle_speed);
  e.calibration_folds = static_cast<int>(c.get_int("data.calibration_folds", e.calibration_folds));
  e.calibration_waypoints =
      static_cast<int>(c.get_int("data.calibration_waypoints", e.calibration_waypoints));
  e.validation_duration = c.get_double("data.validation_duration", e.validation_duration);
  e.push_joint = static_cast<int>(c.get_int("data.push_joint", e.push_joint + 1)) - 1;
  e.push_amplitude = c.get_double("data.push_amplitude", e.push_amplitude);
  e.push_duration = c.get_double("data.push_duration", e.push_duration);

  std::vector<std::string> names;
  for (Variant v : e.variants) names.push_back(variant_name(v));
  e.variants.clear();
  try {
    for (const auto& s : c.get_strings("train.variants", names)) e.variants.push_back(parse_variant(s));
    e.detector_variant =
        parse_variant(c.get_string("detector.variant", variant_name(e.detector_variant)));
  } catch (const std::invalid_argument& ex) {
    throw FormatError(ex.what());
  }
  e.subset_size = non_negative(c, "train.subset_size", e.subset_size);
  e.velocity_threshold = c.get_double("train.velocity_threshold", e.velocity_threshold);
  e.standardize = c.get_bool("train.standardize", e.standardize);

  auto& o = e.optimizer;
  o.learning_rate = c.get_double("optimizer.learning_rate", o.learning_rate);
  o.beta1 = c.get_double("optimizer.beta1", o.beta1);
  o.beta2 = c.get_double("optimizer.beta2", o.beta2);
  o.epsilon = c.get_double("optimizer.epsilon", o.epsilon);
  o.iterations = static_cast<int>(c.get_int("optimizer.iterations", o.iterations));
  o.batch_size = static_cast<int>(c.get_int("optimizer.batch_size", o.batch_size));
  o.tolerance = c.get_double("optimizer.tolerance", o.tolerance);
  o.patience = static_cast<int>(c.get_int("optimizer.patience", o.patience));
  o.eval_every = static_cast<int>(c.get_int("optimizer.eval_every", o.eval_every));
  o.min_noise_variance = c.get_double("optimizer.min_noise_variance", o.min_noise_variance);

  e.filter_tau = c.get_double("detector.filter_tau", e.filter_tau);
  e.threshold_rule.quantile = c.get_double("detector.quantile", e.threshold_rule.quantile);
  e.threshold_rule.margin = c.get_double("detector.margin", e.threshold_rule.margin);
  e.segmentation.min_samples = non_negative(c, "detector.min_samples", e.segmentation.min_samples);
  e.segmentation.merge_gap = non_negative(c, "detector.merge_gap", e.segmentation.merge_gap);

  c.check_consumed();
  e.validate();
  return e;
}

Config ExperimentConfig::to_config() const {
  Config c;
  c.set("seed", std::to_string(seed));
  c.set("out", out.string());
  c.set("paper_scale", paper_scale ? "true" : "false");
  c.set("plant.mass", join(plant.arm.mass));
  c.set("plant.length", join(plant.arm.length));
  c.set("plant.com", join(plant.arm.com));
  c.set("plant.inertia", join(plant.arm.inertia));
  c.set("plant.gravity", io::format_double(plant.arm.gravity));
  c.set("motor.rotor_inertia", join(plant.motor.rotor_inertia));
  c.set("motor.damping", join(plant.motor.damping));
  c.set("motor.torque_constant", join(plant.motor.torque_constant));
  c.set("motor.gear_ratio", join(plant.motor.gear_ratio));
  std::vector<double> fs_, fk, fv;
  for (const auto& f : plant.friction.joints) {
    fs_.push_back(f.static_coeff);
    fk.push_back(f.kinetic_coeff);
    fv.push_back(f.viscous_coeff);
  }
  c.set("friction.static", join(fs_));
  c.set("friction.kinetic", join(fk));
  c.set("friction.viscous", join(fv));
  c.set("controller.kp", join(plant.control.kp));
  c.set("controller.kd", join(plant.control.kd));
  c.set("controller.ki", join(plant.control.ki));
  c.set("controller.saturation", join(plant.control.saturation));
  c.set("controller.windup", join(plant.control.windup));
  c.set("sim.dt", io::format_double(sim.dt));
  c.set("sim.current_noise_std", io::format_double(sim.current_noise_std));
  c.set("sim.disturbance_std", io::format_double(sim.disturbance_std));
  c.set("sim.stiction_band", io::format_double(sim.stiction_band));
  c.set("sim.differenced_acceleration", sim.differenced_acceleration ? "true" : "false");
  c.set("data.train_waypoints", std::to_string(train_waypoints));
  c.set("data.test_waypoints", std::to_string(test_waypoints));
  c.set("data.generalization_waypoints", std::to_string(generalization_waypoints));
  c.set("data.circle_radius", io::format_double(circle_radius));
  c.set("data.circle_speed", io::format_double(circle_speed));
  c.set("data.calibration_folds", std::to_string(calibration_folds));
  c.set("data.calibration_waypoints", std::to_string(calibration_waypoints));
  c.set("data.validation_duration", io::format_double(validation_duration));
  c.set("data.push_joint", std::to_string(push_joint + 1));
  c.set("data.push_amplitude", io::format_double(push_amplitude));
  c.set("data.push_duration", io::format_double(push_duration));
  std::string names;
  for (Variant v : variants) names += (names.empty() ? "" : ", ") + variant_name(v);
  c.set("train.variants", names);
  c.set("train.subset_size", std::to_string(subset_size));
  c.set("train.velocity_threshold", io::format_double(velocity_threshold));
  c.set("train.standardize", standardize ? "true" : "false");
  c.set("optimizer.learning_rate", io::format_double(optimizer.learning_rate));
  c.set("optimizer.beta1", io::format_double(optimizer.beta1));
  c.set("optimizer.beta2", io::format_double(optimizer.beta2));
  c.set("optimizer.epsilon", io::format_double(optimizer.epsilon));
  c.set("optimizer.iterations", std::to_string(optimizer.iterations));
  c.set("optimizer.batch_size", std::to_string(optimizer.batch_size));
  c.set("optimizer.tolerance", io::format_double(optimizer.tolerance));
  c.set("optimizer.patience", std::to_string(optimizer.patience));
  c.set("optimizer.eval_every", std::to_string(optimizer.eval_every));
  c.set("optimizer.min_noise_variance", io::format_double(optimizer.min_noise_variance));
  c.set("detector.variant", variant_name(detector_variant));
  c.set("detector.filter_tau", io::format_double(filter_tau));
  c.set("detector.quantile", io::format_double(threshold_rule.quantile));
  c.set("detector.margin", io::format_double(threshold_rule.margin));
  c.set("detector.min_samples", std::to_string(segmentation.min_samples));
  c.set("detector.merge_gap", std::to_string(segmentation.merge_gap));
  return c;
}

void ExperimentConfig::validate() const {
  plant.validate();
  sim.validate();
  optimizer.validate();
  if (dof() != 2) {
    throw std::invalid_argument("the experiment scenarios drive a planar two-link arm");
  }
  if (train_waypoints < 1 || test_waypoints < 1 || generalization_waypoints < 1 ||
      calibration_waypoints < 1) {
    throw std::invalid_argument("waypoint counts must be positive");
  }
  if (!(circle_radius > 0.0) || !(circle_speed > 0.0)) {
    throw std::invalid_argument("circle radius and speed must be positive");
  }
  if (calibration_folds < 1) throw std::invalid_argument("need at least one calibration fold");
  if (!(validation_duration > 0.0)) throw std::invalid_argument("validation duration must be > 0");
  if (push_joint < 0 || push_joint >= dof()) throw std::invalid_argument("push joint out of range");
  if (!(push_duration > 0.0)) throw std::invalid_argument("push duration must be positive");
  if (variants.empty()) throw std::invalid_argument("no estimator variants selected");
  if (std::find(variants.begin(), variants.end(), detector_variant) == variants.end()) {
    throw std::invalid_argument("detector variant " + variant_name(detector_variant) +
                                " is not among the trained variants");
  }
  if (subset_size < 1) throw std::invalid_argument("subset size must be positive");
  if (!(velocity_threshold > 0.0)) throw std::invalid_argument("velocity threshold must be > 0");
  ThresholdConfig th;
  th.sigma = VectorXd::Ones(dof());
  th.rule = threshold_rule;
  th.tau = filter_tau;
  th.validate();
  if (segmentation.min_samples < 1) throw std::invalid_argument("min_samples must be >= 1");
}

// ---------------------------------------------------------------- datasets

std::vector<std::string> dataset_names(const ExperimentConfig& cfg) {
  std::vector<std::string> out{"d1_train", "d1_test", "d2"};
  for (int k = 1; k <= cfg.calibration_folds; ++k) out.push_back("calibration_" + std::to_string(k));
  out.push_back("validation");
  out.push_back("collision");
  return out;
}

sim::Scenario mixed_task_scenario(int waypoints, double radius, double speed, double hold,
                                  double min_duration) {
  sim::Scenario s = sim::random_waypoints_scenario(waypoints);
  s.name = "mixed-task";
  sim::CirclePhase c;
  c.radius = radius;
  c.speed = speed;
  s.phases.push_back(c);
  s.phases.push_back(sim::HoldPhase{hold});
  s.min_duration = min_duration;
  return s;
}

sim::Scenario dataset_scenario(const ExperimentConfig& cfg, const std::string& name) {
  if (name == "d1_train") return sim::random_waypoints_scenario(cfg.train_waypoints);
  if (name == "d1_test") return sim::random_waypoints_scenario(cfg.test_waypoints);
  if (name == "d2") {
    return mixed_task_scenario(cfg.generalization_waypoints, cfg.circle_radius, cfg.circle_speed,
                               2.0, 0.0);
  }
  if (name.rfind("calibration_", 0) == 0) {
    return mixed_task_scenario(cfg.calibration_waypoints, cfg.circle_radius, cfg.circle_speed,
                               10.0, 0.0);
  }
  if (name == "validation") {
    return mixed_task_scenario(cfg.calibration_waypoints + 2, cfg.circle_radius, cfg.circle_speed,
                               10.0, cfg.validation_duration);
  }
  if (name == "collision") {
    sim::Scenario s =
        sim::collision_episodes_scenario(cfg.push_joint, cfg.push_amplitude, cfg.push_duration);
    auto& c = std::get<sim::CirclePhase>(s.phases[0]);
    c.radius = cfg.circle_radius;
    c.speed = cfg.circle_speed;
    return s;
  }
  throw std::invalid_argument("unknown dataset '" + name + "'");
}

std::uint64_t dataset_seed(const ExperimentConfig& cfg, const std::string& name) {
  return Rng(cfg.seed).derive("dataset:" + name).next_u64();
}

fs::path data_dir(const ExperimentConfig& cfg) { return cfg.out / "data"; }

fs::path model_path(const ExperimentConfig& cfg, Variant v, int joint) {
  return cfg.out / "models" / (stem_of(v, joint) + ".model");
}

// ---------------------------------------------------------------- simulate

SimulateResult run_simulate(const ExperimentConfig& cfg) {
  cfg.validate();
  io::Manifest m(cfg.out);
  m.load();
  SimulateResult out;
  const fs::path conf = cfg.out / "config.txt";
  io::write_file(conf, cfg.to_config().to_string());
  m.record_write(conf, "simulate");
  out.files.push_back(conf);
  for (const auto& name : dataset_names(cfg)) {
    const sim::Scenario sc = dataset_scenario(cfg, name);
    sim::Dataset ds = sim::generate_dataset(cfg.plant, cfg.sim, sc, dataset_seed(cfg, name));
    sim::Trajectory& traj = ds.at(0);
    traj.name = name;
    if (name == "validation") truncate(traj, cfg.validation_duration);
    for (const auto& f : io::write_trajectory(data_dir(cfg), name, traj, cfg.plant, cfg.sim, sc.name)) {
      m.record_write(f, "simulate");
      out.files.push_back(f);
    }
  }
  m.save();
  return out;
}

// ---------------------------------------------------------------- train

TrainResult run_train(const ExperimentConfig& cfg) {
  cfg.validate();
  io::Manifest m(cfg.out);
  m.load();
  const sim::Trajectory train = load_dataset(cfg, m, "d1_train", "train");
  const auto kin = cfg.plant.arm.kinematics();
  const int n = cfg.dof();

  ParametricOptions popts;
  popts.threshold = cfg.velocity_threshold;
  std::vector<ParametricModel> means;
  for (int j = 0; j < n; ++j) {
    means.push_back(fit_parametric(train.samples, kin, cfg.plant.motor, j, popts));
  }

  TrainResult out;
  const std::uint64_t subset_seed = Rng(cfg.seed).derive("subset").next_u64();
  for (Variant v : cfg.variants) {
    for (int j = 0; j < n; ++j) {
      BuildOptions o;
      o.optimizer = cfg.optimizer;
      o.optimizer.seed = Rng(cfg.seed).derive("optimizer:" + stem_of(v, j)).next_u64();
      o.subset_size = cfg.subset_size;
      o.subset_seed = subset_seed;
      o.threshold = cfg.velocity_threshold;
      o.standardize = cfg.standardize;
      o.parametric = popts;
      o.mean = means[j];
      BuildResult r = build(v, train.samples, kin, cfg.plant.motor, j, o);

      const fs::path mp = model_path(cfg, v, j);
      save_estimator(mp, r.estimator);
      m.record_write(mp, "train");
      if (r.optimization) {
        const fs::path lp = cfg.out / "models" / (stem_of(v, j) + "_loss.csv");
        io::write_file(lp, loss_csv(*r.optimization));
        m.record_write(lp, "train");
      }
      if (!r.subset.empty()) {
        std::string s = "index\n";
        for (std::size_t i : r.subset) s += std::to_string(i) + "\n";
        const fs::path sp = cfg.out / "models" / (stem_of(v, j) + "_subset.csv");
        io::write_file(sp, s);
        m.record_write(sp, "train");
      }
      out.estimators.emplace(std::make_pair(v, j), std::move(r.estimator));
    }
  }

  std::vector<Estimator> det;
  for (int j = 0; j < n; ++j) det.push_back(out.estimators.at({cfg.detector_variant, j}));
  std::vector<MonitoringSignal> signals;
  std::vector<std::string> folds;
  for (int k = 1; k <= cfg.calibration_folds; ++k) {
    const std::string name = "calibration_" + std::to_string(k);
    const sim::Trajectory t = load_dataset(cfg, m, name, "train");
    check_collision_free(t);
    signals.push_back(monitoring_signal(det, t.samples, cfg.filter_tau));
    folds.push_back(name);
  }
  out.thresholds = calibrate_threshold(signals, cfg.threshold_rule, cfg.filter_tau);
  const json th = {
      {"format", "gpcd-thresholds"},
      {"version", 1},
      {"variant", variant_name(cfg.detector_variant)},
      {"sigma", std::vector<double>(out.thresholds.sigma.data(),
                                    out.thresholds.sigma.data() + out.thresholds.sigma.size())},
      {"quantile", out.thresholds.rule.quantile},
      {"margin", out.thresholds.rule.margin},
      {"tau", out.thresholds.tau},
      {"calibration", folds}};
  const fs::path tp = cfg.out / "thresholds.json";
  io::write_file(tp, th.dump(2) + "\n");
  m.record_write(tp, "train");
  m.save();
  return out;
}

// ---------------------------------------------------------------- eval

std::vector<EvalRow> run_eval(const ExperimentConfig& cfg) {
  cfg.validate();
  io::Manifest m(cfg.out);
  m.load();
  const std::pair<std::string, std::string> sets[] = {{"d1_test", "near-training"},
                                                      {"d2", "generalization"}};
  std::map<std::pair<Variant, int>, Estimator> models;
  for (Variant v : cfg.variants) {
    for (int j = 0; j < cfg.dof(); ++j) models.emplace(std::make_pair(v, j), load_model(cfg, m, v, j, "eval"));
  }
  std::vector<EvalRow> rows;
  for (const auto& [file, label] : sets) {
    const sim::Trajectory traj = load_dataset(cfg, m, file, "eval");
    const auto& S = traj.samples;
    for (Variant v : cfg.variants) {
      for (int j = 0; j < cfg.dof(); ++j) {
        const Prediction p = predict_current(models.at({v, j}), S);
        for (const bool quasi : {true, false}) {
          std::vector<Eigen::Index> idx;
          for (std::size_t k = 0; k < S.size(); ++k) {
            if (is_quasi_static(S[k], j, cfg.velocity_threshold) == quasi) {
              idx.push_back(static_cast<Eigen::Index>(k));
            }
          }
          EvalRow row{variant_name(v), j + 1, quasi ? "quasi-static" : "dynamical", label,
                      std::numeric_limits<double>::quiet_NaN(), idx.size()};
          if (idx.size() >= 2) {
            VectorXd y(static_cast<Eigen::Index>(idx.size())), yh(y.size());
            for (Eigen::Index r = 0; r < y.size(); ++r) {
              y[r] = S[static_cast<std::size_t>(idx[r])].i_meas[j];
              yh[r] = p.mean[idx[r]];
            }
            try {
              row.nmse = nmse(y, yh);
            } catch (const std::domain_error&) {
            }
          }
          rows.push_back(std::move(row));
        }
      }
    }
  }
  std::string csv = "estimator,joint,regime,dataset,nmse,samples\n";
  for (const auto& r : rows) {
    csv += r.estimator + "," + std::to_string(r.joint) + "," + r.regime + "," + r.dataset + "," +
           nmse_text(r.nmse) + "," + std::to_string(r.samples) + "\n";
  }
  const fs::path ep = cfg.out / "eval.csv";
  io::write_file(ep, csv);
  m.record_write(ep, "eval");
  m.save();
  return rows;
}

std::vector<EvalRow> read_eval_csv(const fs::path& path) {
  std::istringstream in(io::read_file(path));
  std::string line;
  if (!std::getline(in, line) || line != "estimator,joint,regime,dataset,nmse,samples") {
    throw FormatError(path.string() + ": missing or wrong eval header");
  }
  std::vector<EvalRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t pos = 0;
    for (;;) {
      const std::size_t c = line.find(',', pos);
      f.push_back(line.substr(pos, c - pos));
      if (c == std::string::npos) break;
      pos = c + 1;
    }
    if (f.size() != 6) throw FormatError(path.string() + ": ragged eval row");
    EvalRow r;
    r.estimator = f[0];
    r.joint = std::stoi(f[1]);
    r.regime = f[2];
    r.dataset = f[3];
    r.nmse = f[4] == "nan" ? std::numeric_limits<double>::quiet_NaN() : io::parse_double(f[4]);
    r.samples = std::stoul(f[5]);
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---------------------------------------------------------------- detect

DetectResult run_detect(const ExperimentConfig& cfg, const std::string& dataset) {
  cfg.validate();
  io::Manifest m(cfg.out);
  m.load();
  Variant v = cfg.detector_variant;
  const ThresholdConfig th = load_thresholds(cfg, m, "detect", v);
  const std::vector<Estimator> ests = detector_models(cfg, m, v, "detect");
  const sim::Trajectory traj = load_dataset(cfg, m, dataset, "detect");
  if (static_cast<int>(th.sigma.size()) != cfg.dof()) {
    throw DimensionError("thresholds do not match the number of joints");
  }
  const MonitoringSignal sig = monitoring_signal(ests, traj.samples, th.tau);

  DetectResult out;
  out.events = segment_events(detect(sig, th), sig.t, cfg.segmentation);
  annotate_events(out.events, sig, th);
  match_episodes(out.events, traj.episodes);
  out.episodes = traj.episodes;

  std::string lines;
  for (const auto& e : out.events) lines += event_json(e).dump() + "\n";
  out.events_file = cfg.out / "detect" / (dataset + "_events.jsonl");
  io::write_file(out.events_file, lines);
  m.record_write(out.events_file, "detect");

  const int n = cfg.dof();
  std::string trace = "t";
  for (int j = 1; j <= n; ++j) {
    const std::string s = std::to_string(j);
    trace += ",i" + s + ",ihat" + s + ",dq" + s + ",s" + s + ",flag" + s;
  }
  trace += "\n";
  for (std::size_t k = 0; k < static_cast<std::size_t>(sig.size()); ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    trace += io::format_double(sig.t[k]);
    for (int j = 0; j < n; ++j) {
      const double s = sig.filtered(r, j);
      trace += "," + io::format_double(sig.measured(r, j)) + "," +
               io::format_double(sig.predicted(r, j)) + "," +
               io::format_double(traj.samples[k].dq[j]) + "," + io::format_double(s) + "," +
               (std::abs(s) >= th.sigma[j] ? "1" : "0");
    }
    trace += "\n";
  }
  out.trace_file = cfg.out / "detect" / (dataset + "_trace.csv");
  io::write_file(out.trace_file, trace);
  m.record_write(out.trace_file, "detect");
  m.save();
  return out;
}

int detect_exit_code(std::size_t events) {
  return static_cast<int>(std::min<std::size_t>(events, 125));
}

// ---------------------------------------------------------------- report

Report run_report(const ExperimentConfig& cfg) {
  cfg.validate();
  io::Manifest m(cfg.out);
  m.load();
  Report rep;
  const fs::path ep = cfg.out / "eval.csv";
  if (!fs::exists(ep)) throw CoverageError("eval.csv not found; run eval first");
  m.record_read(ep, "report");
  rep.table = read_eval_csv(ep);

  const sim::Trajectory d2 = load_dataset(cfg, m, "d2", "report");
  rep.friction_share = sim::friction_share(cfg.plant, sim::Dataset{d2});

  const auto lookup = [&](const std::string& est, int joint, const std::string& regime,
                          const std::string& dataset) {
    for (const auto& r : rep.table) {
      if (r.estimator == est && r.joint == joint && r.regime == regime && r.dataset == dataset) {
        return r.nmse;
      }
    }
    return std::numeric_limits<double>::quiet_NaN();
  };
  const std::string P = variant_name(Variant::kParametric);
  const std::string S = variant_name(Variant::kStandardSemiParametric);
  const std::string G = variant_name(Variant::kGatedSemiParametric);
  for (int j = 1; j <= cfg.dof(); ++j) {
    const double gs = lookup(G, j, "quasi-static", "generalization");
    rep.static_ordering.push_back(gs < lookup(S, j, "quasi-static", "generalization") &&
                                  gs < lookup(P, j, "quasi-static", "generalization"));
    rep.dynamic_parity.push_back(lookup(G, j, "dynamical", "near-training") <=
                                 2.0 * lookup(S, j, "dynamical", "near-training"));
  }

  const fs::path dd = cfg.out / "detect";
  const auto col = summarize_events(dd / "collision_events.jsonl", data_dir(cfg) / "collision.json", m);
  const auto val = summarize_events(dd / "validation_events.jsonl", data_dir(cfg) / "validation.json", m);
  rep.collision_events = col.events;
  rep.collision_episodes = col.episodes;
  rep.collision_matched = col.matched;
  rep.validation_events = val.events;

  json jr;
  jr["format"] = "gpcd-report";
  jr["version"] = 1;
  jr["friction_share"] = std::vector<double>(rep.friction_share.data(),
                                             rep.friction_share.data() + rep.friction_share.size());
  jr["static_ordering"] = rep.static_ordering;
  jr["dynamic_parity"] = rep.dynamic_parity;
  json table = json::array();
  for (const auto& r : rep.table) {
    table.push_back({{"estimator", r.estimator},
                     {"joint", r.joint},
                     {"regime", r.regime},
                     {"dataset", r.dataset},
                     {"nmse", std::isfinite(r.nmse) ? json(r.nmse) : json(nullptr)},
                     {"samples", r.samples}});
  }
  jr["table"] = table;
  jr["collision"] = col.present ? json{{"events", col.events},
                                       {"episodes", col.episodes},
                                       {"matched", col.matched}}
                                : json(nullptr);
  jr["validation"] = val.present ? json{{"events", val.events}} : json(nullptr);

  std::ostringstream t;
  t << "friction share (generalization set):";
  for (Eigen::Index j = 0; j < rep.friction_share.size(); ++j) {
    t << " joint" << j + 1 << '=' << io::format_double(rep.friction_share[j]);
  }
  t << "\n\nnMSE\n";
  for (const auto& r : rep.table) {
    t << "  " << r.dataset << ' ' << r.regime << " joint" << r.joint << ' ' << r.estimator << ": "
      << nmse_text(r.nmse) << " (" << r.samples << " samples)\n";
  }
  t << '\n';
  for (int j = 0; j < cfg.dof(); ++j) {
    const bool relevant = rep.friction_share[j] > 0.2;
    t << "joint" << j + 1 << ": quasi-static generalization SP_P best: "
      << (rep.static_ordering[j] ? "yes" : "no")
      << (relevant ? "" : " (friction share <= 20%, not required)")
      << "; dynamical near-training SP_P <= 2 x SP_S: " << (rep.dynamic_parity[j] ? "yes" : "no")
      << '\n';
  }
  if (col.present) {
    t << "collision run: " << col.events << " events, " << col.matched << " of " << col.episodes
      << " episodes matched\n";
  }
  if (val.present) t << "validation run: " << val.events << " events\n";
  rep.text = t.str();

  const fs::path rj = cfg.out / "report.json", rt = cfg.out / "report.txt";
  io::write_file(rj, jr.dump(2) + "\n");
  io::write_file(rt, rep.text);
  m.record_write(rj, "report");
  m.record_write(rt, "report");
  m.save();
  return rep;
}

}  // namespace gpcd
