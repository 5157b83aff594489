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

#ifndef GPCD_IO_HPP_
#define GPCD_IO_HPP_

#include <filesystem>
#include <map>
#include <set>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "gpcd/sim/scenario.hpp"

namespace gpcd::io {

namespace fs = std::filesystem;

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view s);

/// Hex SHA-256 of a byte string or a file.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const fs::path& path);

std::string read_file(const fs::path& path);
/// Writes atomically enough for our purposes: temp file then rename.
void write_file(const fs::path& path, std::string_view contents);

/// Column names of the trajectory CSV for n joints, 1-based joint suffixes:
/// t, q1..qn, dq1.., ddq1.., qref1.., dqref1.., eq1.., deq1.., ic1.., i1..,
/// tauext1.., stuck1...
std::vector<std::string> trajectory_columns(int dof);

std::string trajectory_to_csv(const sim::Trajectory& traj);
/// Parses the samples of a trajectory CSV. Throws FormatError on a missing or
/// wrong header, ragged rows, or unparsable numbers.
std::vector<sim::JointSample> trajectory_from_csv(std::string_view csv);

/// Metadata sidecar: trajectory name, seed, scenario, plant, sim config,
/// ground-truth episodes and phase windows.
nlohmann::json trajectory_metadata(const sim::Trajectory& traj, const sim::Plant& plant,
                                   const sim::SimConfig& config, const std::string& scenario);

/// Write <stem>.csv and <stem>.json; returns both paths.
std::vector<fs::path> write_trajectory(const fs::path& dir, const std::string& stem,
                                       const sim::Trajectory& traj, const sim::Plant& plant,
                                       const sim::SimConfig& config,
                                       const std::string& scenario);
/// Read <stem>.csv and <stem>.json back into a trajectory.
sim::Trajectory read_trajectory(const fs::path& dir, const std::string& stem);

nlohmann::json plant_to_json(const sim::Plant& plant);
nlohmann::json episodes_to_json(const std::vector<sim::Episode>& episodes);
std::vector<sim::Episode> episodes_from_json(const nlohmann::json& j);

/// Hash list of every file a pipeline stage read or wrote, keyed by path
/// relative to the output root.
class Manifest {
 public:
  explicit Manifest(fs::path root);

  /// Load an existing manifest.json under root, if any.
  void load();
  /// Hash `file` and note that `stage` wrote it.
  void record_write(const fs::path& file, const std::string& stage);
  /// Hash `file` and note that `stage` read it. Throws FormatError when the
  /// file no longer matches the hash recorded by its writer.
  void record_read(const fs::path& file, const std::string& stage);
  void save() const;

  struct Entry {
    std::string sha256;
    std::uintmax_t bytes = 0;
    std::string written_by;
    std::set<std::string> read_by;
  };
  const std::map<std::string, Entry>& entries() const { return entries_; }
  fs::path path() const { return root_ / "manifest.json"; }

 private:
  fs::path root_;
  std::map<std::string, Entry> entries_;
};

}  // namespace gpcd::io

#endif  // GPCD_IO_HPP_
