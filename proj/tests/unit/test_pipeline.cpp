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

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gpcd/errors.hpp"
#include "gpcd/io.hpp"
#include "gpcd/pipeline.hpp"

using namespace gpcd;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny(const fs::path& out) {
  Config c = Config::parse(R"(
data.train_waypoints = 8
data.test_waypoints = 3
data.generalization_waypoints = 3
data.calibration_folds = 2
data.calibration_waypoints = 3
data.validation_duration = 20
train.subset_size = 300
optimizer.iterations = 10
optimizer.batch_size = 128
)");
  c.set("out", out.string());
  return ExperimentConfig::from(c);
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string s;
  std::getline(in, s);
  return s;
}

}  // namespace

TEST_CASE("stages refuse to run out of order") {
  const fs::path out = fs::temp_directory_path() / "gpcd_unit_order";
  fs::remove_all(out);
  const auto cfg = tiny(out);
  CHECK_THROWS_AS(run_train(cfg), CoverageError);
  CHECK_THROWS_AS(run_detect(cfg, "collision"), CoverageError);
  CHECK(detect_exit_code(0) == 0);
  CHECK(detect_exit_code(4) == 4);
  CHECK(detect_exit_code(1000) == 125);
}

TEST_CASE("end-to-end pipeline on a tiny configuration") {
  const fs::path out = fs::temp_directory_path() / "gpcd_unit_pipeline";
  fs::remove_all(out);
  const auto cfg = tiny(out);

  const auto sim = run_simulate(cfg);
  CHECK(sim.files.size() == 1 + 2 * dataset_names(cfg).size());
  const auto val = io::read_trajectory(data_dir(cfg), "validation");
  CHECK(val.samples.back().t <= 20.0 + 1e-9);
  CHECK(val.samples.back().t >= 20.0 - 8e-3);
  CHECK(val.episodes.empty());
  CHECK(io::read_trajectory(data_dir(cfg), "collision").episodes.size() == 4);

  // Same configuration, same bytes.
  const std::string before = io::read_file(out / "manifest.json");
  run_simulate(cfg);
  CHECK(io::read_file(out / "manifest.json") == before);

  const auto tr = run_train(cfg);
  CHECK(tr.estimators.size() == 6);
  CHECK(tr.thresholds.sigma.minCoeff() > 0.0);
  CHECK(fs::exists(model_path(cfg, Variant::kGatedSemiParametric, 1)));
  CHECK(fs::exists(out / "models" / "SP_S_joint2_loss.csv"));
  CHECK(fs::exists(out / "models" / "SP_P_joint1_subset.csv"));
  CHECK(fs::exists(out / "thresholds.json"));

  const auto rows = run_eval(cfg);
  CHECK(rows.size() == 3 * 2 * 2 * 2);
  CHECK(first_line(out / "eval.csv") == "estimator,joint,regime,dataset,nmse,samples");
  const auto back = read_eval_csv(out / "eval.csv");
  REQUIRE(back.size() == rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    CHECK(back[k].estimator == rows[k].estimator);
    CHECK((back[k].nmse == rows[k].nmse || (std::isnan(back[k].nmse) && std::isnan(rows[k].nmse))));
  }

  const auto det = run_detect(cfg, "collision");
  CHECK(det.episodes.size() == 4);
  CHECK(first_line(det.trace_file) ==
        "t,i1,ihat1,dq1,s1,flag1,i2,ihat2,dq2,s2,flag2");
  std::ifstream ev(det.events_file);
  std::size_t lines = 0;
  for (std::string l; std::getline(ev, l);) {
    const auto j = nlohmann::json::parse(l);
    CHECK(j.contains("start"));
    CHECK(j.contains("end"));
    CHECK(j.contains("joints"));
    CHECK(j.contains("peak"));
    CHECK(j.contains("latency"));
    ++lines;
  }
  CHECK(lines == det.events.size());
  run_detect(cfg, "validation");

  const auto rep = run_report(cfg);
  CHECK(rep.table.size() == rows.size());
  CHECK(rep.friction_share.size() == 2);
  CHECK(fs::exists(out / "report.json"));
  CHECK(rep.text.find("collision run") != std::string::npos);

  // Every file under the output root is listed, and nothing stale.
  io::Manifest m(out);
  m.load();
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(out)) {
    if (!e.is_regular_file() || e.path().filename() == "manifest.json") continue;
    ++files;
    const auto rel = fs::relative(e.path(), out).generic_string();
    REQUIRE(m.entries().count(rel) == 1);
    CHECK(m.entries().at(rel).sha256 == io::sha256_file(e.path()));
  }
  CHECK(files == m.entries().size());
  CHECK(m.entries().at("data/d1_train.csv").read_by.count("train") == 1);
  CHECK(m.entries().at("eval.csv").read_by.count("report") == 1);
}
