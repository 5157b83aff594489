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

#include "gpcd/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gpcd/errors.hpp"

namespace gpcd::io {

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  for (;;) {
    const std::size_t next = line.find(sep, pos);
    out.push_back(line.substr(pos, next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

std::string_view strip_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return {buf.data(), res.ptr};
}

double parse_double(std::string_view s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  double v = 0.0;
  const char* first = s.data();
  if (!s.empty() && s.front() == '+') ++first;
  const auto res = std::from_chars(first, s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw FormatError("not a number: '" + std::string(s) + "'");
  }
  return v;
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xf]);
  }
  return out;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_file(path)); }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("write to '" + tmp.string() + "' failed");
  }
  fs::rename(tmp, path);
}

std::vector<std::string> trajectory_columns(int dof) {
  static const char* kBlocks[] = {"q",  "dq", "ddq", "qref", "dqref", "eq",
                                  "deq", "ic", "i",   "tauext", "stuck"};
  std::vector<std::string> cols{"t"};
  for (const char* b : kBlocks) {
    for (int j = 1; j <= dof; ++j) cols.push_back(std::string(b) + std::to_string(j));
  }
  return cols;
}

std::string trajectory_to_csv(const sim::Trajectory& traj) {
  if (traj.samples.empty()) throw FormatError("cannot write an empty trajectory");
  const int n = traj.samples.front().dof();
  std::string out;
  const auto cols = trajectory_columns(n);
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (c) out += ',';
    out += cols[c];
  }
  out += '\n';
  for (const auto& s : traj.samples) {
    if (s.dof() != n) throw DimensionError("trajectory mixes joint counts");
    out += format_double(s.t);
    for (const Eigen::VectorXd* v : {&s.q, &s.dq, &s.ddq, &s.q_ref, &s.dq_ref, &s.e_q, &s.de_q,
                                     &s.i_cmd, &s.i_meas, &s.tau_ext}) {
      for (int j = 0; j < n; ++j) {
        out += ',';
        out += format_double((*v)[j]);
      }
    }
    for (int j = 0; j < n; ++j) out += s.stuck[static_cast<std::size_t>(j)] ? ",1" : ",0";
    out += '\n';
  }
  return out;
}

std::vector<sim::JointSample> trajectory_from_csv(std::string_view csv) {
  std::size_t pos = 0;
  auto next_line = [&](std::string_view& line) {
    if (pos >= csv.size()) return false;
    std::size_t end = csv.find('\n', pos);
    if (end == std::string_view::npos) end = csv.size();
    line = strip_cr(csv.substr(pos, end - pos));
    pos = end + 1;
    return true;
  };
  std::string_view header;
  if (!next_line(header) || header.empty()) throw FormatError("trajectory CSV has no header");
  const auto names = split(header, ',');
  if ((names.size() - 1) % 11 != 0 || names.size() < 12) {
    throw FormatError("trajectory CSV header has " + std::to_string(names.size()) + " columns");
  }
  const int n = static_cast<int>((names.size() - 1) / 11);
  const auto expected = trajectory_columns(n);
  for (std::size_t c = 0; c < names.size(); ++c) {
    if (names[c] != expected[c]) {
      throw FormatError("trajectory CSV column " + std::to_string(c) + " is '" +
                        std::string(names[c]) + "', expected '" + expected[c] + "'");
    }
  }

  std::vector<sim::JointSample> out;
  std::string_view line;
  std::size_t line_no = 1;
  while (next_line(line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != names.size()) {
      throw FormatError("trajectory CSV line " + std::to_string(line_no) + " has " +
                        std::to_string(f.size()) + " fields");
    }
    sim::JointSample s = sim::JointSample::zero(n);
    s.t = parse_double(f[0]);
    std::size_t k = 1;
    for (Eigen::VectorXd* v : {&s.q, &s.dq, &s.ddq, &s.q_ref, &s.dq_ref, &s.e_q, &s.de_q,
                               &s.i_cmd, &s.i_meas, &s.tau_ext}) {
      for (int j = 0; j < n; ++j) (*v)[j] = parse_double(f[k++]);
    }
    for (int j = 0; j < n; ++j) {
      const auto v = f[k++];
      if (v != "0" && v != "1") throw FormatError("stuck flag must be 0 or 1");
      s.stuck[static_cast<std::size_t>(j)] = v == "1";
    }
    out.push_back(std::move(s));
  }
  return out;
}

nlohmann::json plant_to_json(const sim::Plant& p) {
  nlohmann::json fr = nlohmann::json::array();
  for (const auto& f : p.friction.joints) {
    fr.push_back({{"static", f.static_coeff}, {"kinetic", f.kinetic_coeff},
                  {"viscous", f.viscous_coeff}});
  }
  return {{"arm",
           {{"mass", p.arm.mass},
            {"length", p.arm.length},
            {"com", p.arm.com},
            {"inertia", p.arm.inertia},
            {"gravity", p.arm.gravity}}},
          {"motor",
           {{"rotor_inertia", p.motor.rotor_inertia},
            {"damping", p.motor.damping},
            {"torque_constant", p.motor.torque_constant},
            {"gear_ratio", p.motor.gear_ratio}}},
          {"friction", fr},
          {"controller",
           {{"kp", p.control.kp},
            {"kd", p.control.kd},
            {"ki", p.control.ki},
            {"saturation", p.control.saturation},
            {"windup", p.control.windup}}}};
}

nlohmann::json episodes_to_json(const std::vector<sim::Episode>& episodes) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : episodes) {
    out.push_back({{"joint", e.joint + 1}, {"start", e.start}, {"end", e.end},
                   {"amplitude", e.amplitude}});
  }
  return out;
}

std::vector<sim::Episode> episodes_from_json(const nlohmann::json& j) {
  std::vector<sim::Episode> out;
  for (const auto& e : j) {
    out.push_back({e.at("joint").get<int>() - 1, e.at("start").get<double>(),
                   e.at("end").get<double>(), e.at("amplitude").get<double>()});
  }
  return out;
}

nlohmann::json trajectory_metadata(const sim::Trajectory& traj, const sim::Plant& plant,
                                   const sim::SimConfig& config, const std::string& scenario) {
  nlohmann::json windows = nlohmann::json::array();
  for (const auto& w : traj.windows) {
    windows.push_back({{"kind", w.kind}, {"phase", w.phase}, {"start", w.start},
                       {"end", w.end}, {"pose", to_std(w.pose)}});
  }
  const int n = traj.samples.empty() ? plant.dof() : traj.samples.front().dof();
  return {{"format", "gpcd-trajectory"},
          {"version", 1},
          {"name", traj.name},
          {"scenario", scenario},
          {"seed", traj.seed},
          {"dof", n},
          {"samples", traj.samples.size()},
          {"columns", trajectory_columns(n)},
          {"sim",
           {{"dt", config.dt},
            {"current_noise_std", config.current_noise_std},
            {"disturbance_std", config.disturbance_std},
            {"stiction_band", config.stiction_band},
            {"differenced_acceleration", config.differenced_acceleration}}},
          {"plant", plant_to_json(plant)},
          {"episodes", episodes_to_json(traj.episodes)},
          {"windows", windows}};
}

std::vector<fs::path> write_trajectory(const fs::path& dir, const std::string& stem,
                                       const sim::Trajectory& traj, const sim::Plant& plant,
                                       const sim::SimConfig& config,
                                       const std::string& scenario) {
  const fs::path csv = dir / (stem + ".csv");
  const fs::path meta = dir / (stem + ".json");
  write_file(csv, trajectory_to_csv(traj));
  write_file(meta, trajectory_metadata(traj, plant, config, scenario).dump(2) + "\n");
  return {csv, meta};
}

sim::Trajectory read_trajectory(const fs::path& dir, const std::string& stem) {
  sim::Trajectory traj;
  traj.samples = trajectory_from_csv(read_file(dir / (stem + ".csv")));
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_file(dir / (stem + ".json")));
    if (meta.at("format").get<std::string>() != "gpcd-trajectory") {
      throw FormatError("not a trajectory metadata file");
    }
    if (meta.at("version").get<int>() != 1) {
      throw VersionMismatchError("unsupported trajectory metadata version");
    }
    traj.name = meta.at("name").get<std::string>();
    traj.seed = meta.at("seed").get<std::uint64_t>();
    traj.episodes = episodes_from_json(meta.at("episodes"));
    for (const auto& w : meta.at("windows")) {
      sim::PhaseWindow pw;
      pw.kind = w.at("kind").get<std::string>();
      pw.phase = w.at("phase").get<int>();
      pw.start = w.at("start").get<double>();
      pw.end = w.at("end").get<double>();
      const auto pose = w.at("pose").get<std::vector<double>>();
      pw.pose = Eigen::Map<const Eigen::VectorXd>(pose.data(), static_cast<Eigen::Index>(pose.size()));
      traj.windows.push_back(std::move(pw));
    }
    if (meta.at("samples").get<std::size_t>() != traj.samples.size()) {
      throw FormatError("metadata sample count does not match the CSV");
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed trajectory metadata '" + stem + "': " + e.what());
  }
  return traj;
}

Manifest::Manifest(fs::path root) : root_(std::move(root)) {}

namespace {

std::string manifest_key(const fs::path& root, const fs::path& file) {
  const fs::path rel = fs::weakly_canonical(file).lexically_relative(fs::weakly_canonical(root));
  if (rel.empty() || *rel.begin() == "..") return "external/" + file.filename().string();
  return rel.generic_string();
}

}  // namespace

void Manifest::load() {
  entries_.clear();
  if (!fs::exists(path())) return;
  try {
    const auto j = nlohmann::json::parse(read_file(path()));
    if (j.at("format").get<std::string>() != "gpcd-manifest") throw FormatError("not a manifest");
    for (const auto& [key, e] : j.at("files").items()) {
      Entry en;
      en.sha256 = e.at("sha256").get<std::string>();
      en.bytes = e.at("bytes").get<std::uintmax_t>();
      en.written_by = e.at("written_by").get<std::string>();
      for (const auto& r : e.at("read_by")) en.read_by.insert(r.get<std::string>());
      entries_[key] = std::move(en);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what());
  }
}

void Manifest::record_write(const fs::path& file, const std::string& stage) {
  Entry& e = entries_[manifest_key(root_, file)];
  e.sha256 = sha256_file(file);
  e.bytes = fs::file_size(file);
  e.written_by = stage;
  e.read_by.clear();
}

void Manifest::record_read(const fs::path& file, const std::string& stage) {
  const std::string key = manifest_key(root_, file);
  const std::string sha = sha256_file(file);
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    Entry e;
    e.sha256 = sha;
    e.bytes = fs::file_size(file);
    e.written_by = "external";
    it = entries_.emplace(key, std::move(e)).first;
  } else if (it->second.sha256 != sha) {
    if (it->second.written_by != "external") {
      throw FormatError("'" + key + "' changed since the " + it->second.written_by +
                        " stage wrote it");
    }
    it->second.sha256 = sha;
    it->second.bytes = fs::file_size(file);
  }
  it->second.read_by.insert(stage);
}

void Manifest::save() const {
  nlohmann::json files = nlohmann::json::object();
  for (const auto& [key, e] : entries_) {
    files[key] = {{"sha256", e.sha256},
                  {"bytes", e.bytes},
                  {"written_by", e.written_by},
                  {"read_by", std::vector<std::string>(e.read_by.begin(), e.read_by.end())}};
  }
  const nlohmann::json j = {{"format", "gpcd-manifest"}, {"version", 1}, {"files", files}};
  write_file(path(), j.dump(2) + "\n");
}

}  // namespace gpcd::io
