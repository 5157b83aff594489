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

// Python module _gpcd: experiment stages, trajectories and saved estimators.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "gpcd/config.hpp"
#include "gpcd/errors.hpp"
#include "gpcd/estimators.hpp"
#include "gpcd/io.hpp"
#include "gpcd/model_io.hpp"
#include "gpcd/pipeline.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;

namespace {

gpcd::ExperimentConfig make_config(const std::optional<fs::path>& path,
                                   const std::map<std::string, std::string>& overrides) {
  gpcd::Config c = path ? gpcd::Config::load(*path) : gpcd::Config();
  for (const auto& [k, v] : overrides) c.set(k, v);
  auto cfg = gpcd::ExperimentConfig::from(c);
  cfg.validate();
  return cfg;
}

Eigen::MatrixXd stack(const std::vector<gpcd::JointSample>& s,
                      Eigen::VectorXd gpcd::JointSample::*field) {
  const int dof = s.empty() ? 0 : s.front().dof();
  Eigen::MatrixXd M(static_cast<Eigen::Index>(s.size()), dof);
  for (std::size_t k = 0; k < s.size(); ++k) {
    M.row(static_cast<Eigen::Index>(k)) = (s[k].*field).transpose();
  }
  return M;
}

py::dict trajectory_arrays(const gpcd::sim::Trajectory& traj) {
  py::dict d;
  Eigen::VectorXd t(static_cast<Eigen::Index>(traj.samples.size()));
  for (std::size_t k = 0; k < traj.samples.size(); ++k) t[static_cast<Eigen::Index>(k)] = traj.samples[k].t;
  d["t"] = t;
  d["q"] = stack(traj.samples, &gpcd::JointSample::q);
  d["dq"] = stack(traj.samples, &gpcd::JointSample::dq);
  d["ddq"] = stack(traj.samples, &gpcd::JointSample::ddq);
  d["q_ref"] = stack(traj.samples, &gpcd::JointSample::q_ref);
  d["dq_ref"] = stack(traj.samples, &gpcd::JointSample::dq_ref);
  d["e_q"] = stack(traj.samples, &gpcd::JointSample::e_q);
  d["de_q"] = stack(traj.samples, &gpcd::JointSample::de_q);
  d["i_cmd"] = stack(traj.samples, &gpcd::JointSample::i_cmd);
  d["i_meas"] = stack(traj.samples, &gpcd::JointSample::i_meas);
  d["tau_ext"] = stack(traj.samples, &gpcd::JointSample::tau_ext);
  return d;
}

py::dict event_dict(const gpcd::DetectionEvent& e) {
  py::dict d;
  d["start"] = e.start;
  d["end"] = e.end;
  d["first"] = e.first;
  d["last"] = e.last;
  std::vector<int> joints;
  for (int j : e.joints) joints.push_back(j + 1);
  d["joints"] = joints;
  d["peak"] = e.peak;
  d["latency"] = e.latency ? py::cast(*e.latency) : py::none();
  d["episode"] = e.episode ? py::cast(*e.episode + 1) : py::none();
  return d;
}

py::dict eval_row_dict(const gpcd::EvalRow& r) {
  py::dict d;
  d["estimator"] = r.estimator;
  d["joint"] = r.joint;
  d["regime"] = r.regime;
  d["dataset"] = r.dataset;
  d["nmse"] = r.nmse;
  d["samples"] = r.samples;
  return d;
}

}  // namespace

PYBIND11_MODULE(_gpcd, m) {
  m.doc() = "Semi-parametric current models and collision detection";
  m.attr("MODEL_FORMAT_VERSION") = gpcd::kModelFormatVersion;

  auto base = py::register_exception<gpcd::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<gpcd::FormatError>(m, "FormatError", base.ptr());
  py::register_exception<gpcd::CoverageError>(m, "CoverageError", base.ptr());
  py::register_exception<gpcd::VersionMismatchError>(m, "VersionMismatchError", base.ptr());

  py::class_<gpcd::sim::Episode>(m, "Episode")
      .def_property_readonly("joint", [](const gpcd::sim::Episode& e) { return e.joint + 1; })
      .def_readonly("start", &gpcd::sim::Episode::start)
      .def_readonly("end", &gpcd::sim::Episode::end)
      .def_readonly("amplitude", &gpcd::sim::Episode::amplitude);

  py::class_<gpcd::sim::Trajectory>(m, "Trajectory")
      .def_readonly("name", &gpcd::sim::Trajectory::name)
      .def_readonly("seed", &gpcd::sim::Trajectory::seed)
      .def_readonly("episodes", &gpcd::sim::Trajectory::episodes)
      .def("__len__", [](const gpcd::sim::Trajectory& t) { return t.samples.size(); })
      .def("arrays", &trajectory_arrays, "Per-sample fields as numpy arrays, shape (N, dof).");

  m.def("read_trajectory", &gpcd::io::read_trajectory, py::arg("directory"), py::arg("stem"),
        "Load <directory>/<stem>.csv with its metadata sidecar.");

  py::class_<gpcd::Estimator>(m, "Estimator")
      .def_static("load", &gpcd::load_estimator, py::arg("path"))
      .def_property_readonly("variant",
                             [](const gpcd::Estimator& e) { return gpcd::variant_name(e.variant); })
      .def_property_readonly("joint", [](const gpcd::Estimator& e) { return e.joint + 1; })
      .def_property_readonly("parametric_weights",
                             [](const gpcd::Estimator& e) { return e.parametric.weights; })
      .def_property_readonly("training_size", [](const gpcd::Estimator& e) {
        return e.gp ? static_cast<std::size_t>(e.gp->size()) : std::size_t{0};
      })
      .def(
          "predict",
          [](const gpcd::Estimator& e, const gpcd::sim::Trajectory& traj, bool with_variance) {
            const auto p = gpcd::predict_current(e, traj.samples, with_variance);
            if (with_variance) return py::cast(std::make_pair(p.mean, p.variance));
            return py::cast(p.mean);
          },
          py::arg("trajectory"), py::arg("with_variance") = false,
          "Predicted current of the estimator's joint for every sample.");

  py::class_<gpcd::ExperimentConfig>(m, "Experiment")
      .def(py::init(&make_config), py::arg("config") = std::nullopt,
           py::arg("overrides") = std::map<std::string, std::string>{},
           "Experiment from an optional config file plus key=value overrides.")
      .def_readonly("seed", &gpcd::ExperimentConfig::seed)
      .def_readonly("out", &gpcd::ExperimentConfig::out)
      .def("config_text", [](const gpcd::ExperimentConfig& c) { return c.to_config().to_string(); })
      .def("dataset_names", &gpcd::dataset_names)
      .def("simulate",
           [](const gpcd::ExperimentConfig& c) {
             py::gil_scoped_release nogil;
             return gpcd::run_simulate(c).files;
           })
      .def("train",
           [](const gpcd::ExperimentConfig& c) {
             py::gil_scoped_release nogil;
             gpcd::run_train(c);
           })
      .def("eval",
           [](const gpcd::ExperimentConfig& c) {
             std::vector<gpcd::EvalRow> rows;
             {
               py::gil_scoped_release nogil;
               rows = gpcd::run_eval(c);
             }
             py::list out;
             for (const auto& r : rows) out.append(eval_row_dict(r));
             return out;
           })
      .def(
          "detect",
          [](const gpcd::ExperimentConfig& c, const std::string& dataset) {
            gpcd::DetectResult r;
            {
              py::gil_scoped_release nogil;
              r = gpcd::run_detect(c, dataset);
            }
            py::list out;
            for (const auto& e : r.events) out.append(event_dict(e));
            return out;
          },
          py::arg("dataset") = "collision")
      .def("report", [](const gpcd::ExperimentConfig& c) {
        gpcd::Report r;
        {
          py::gil_scoped_release nogil;
          r = gpcd::run_report(c);
        }
        py::dict d;
        d["friction_share"] = r.friction_share;
        d["static_ordering"] = r.static_ordering;
        d["dynamic_parity"] = r.dynamic_parity;
        d["collision_events"] = r.collision_events;
        d["collision_episodes"] = r.collision_episodes;
        d["collision_matched"] = r.collision_matched;
        d["validation_events"] = r.validation_events;
        d["text"] = r.text;
        return d;
      });

  m.def("nmse", [](const Eigen::VectorXd& y, const Eigen::VectorXd& p) { return gpcd::nmse(y, p); },
        py::arg("targets"), py::arg("predictions"));
  m.def("sha256_file", &gpcd::io::sha256_file, py::arg("path"));
  m.def("detect_exit_code", &gpcd::detect_exit_code, py::arg("events"));
}
