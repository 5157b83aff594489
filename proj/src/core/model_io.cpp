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

#include "gpcd/model_io.hpp"

#include <bit>
#include <cstring>

#include "gpcd/errors.hpp"
#include "gpcd/io.hpp"

namespace gpcd {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "model files store little-endian doubles");

namespace {

json blob(const double* data, std::size_t count) {
  std::vector<std::uint8_t> bytes(count * sizeof(double));
  if (count) std::memcpy(bytes.data(), data, bytes.size());
  return json::binary(std::move(bytes));
}

std::vector<double> unblob(const json& j, std::size_t expected) {
  if (!j.is_binary()) throw FormatError("model file: expected a binary matrix field");
  const auto& bytes = j.get_binary();
  if (bytes.size() != expected * sizeof(double)) {
    throw FormatError("model file: matrix field has " + std::to_string(bytes.size()) +
                      " bytes, expected " + std::to_string(expected * sizeof(double)));
  }
  std::vector<double> out(expected);
  if (expected) std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

json vector_blob(const VectorXd& v) { return blob(v.data(), static_cast<std::size_t>(v.size())); }

VectorXd vector_unblob(const json& j, Eigen::Index n) {
  const auto d = unblob(j, static_cast<std::size_t>(n));
  return Eigen::Map<const VectorXd>(d.data(), n);
}

std::vector<double> to_std(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

VectorXd from_std(const std::vector<double>& v) {
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json parametric_to_json(const ParametricModel& p) {
  return {{"lengths", p.kinematics.lengths},
          {"gravity", p.kinematics.gravity},
          {"joint", p.joint},
          {"motor",
           {{"reflected_inertia", p.motor.reflected_inertia},
            {"damping", p.motor.damping},
            {"current_gain", p.motor.current_gain}}},
          {"friction", p.friction},
          {"threshold", p.threshold},
          {"weights", to_std(p.weights)},
          {"active", p.active},
          {"condition", p.condition},
          {"ridge", p.ridge}};
}

ParametricModel parametric_from_json(const json& j) {
  ParametricModel p;
  p.kinematics.lengths = j.at("lengths").get<std::vector<double>>();
  p.kinematics.gravity = j.at("gravity").get<double>();
  p.joint = j.at("joint").get<int>();
  const auto& m = j.at("motor");
  p.motor = {m.at("reflected_inertia").get<double>(), m.at("damping").get<double>(),
             m.at("current_gain").get<double>()};
  p.friction = j.at("friction").get<bool>();
  p.threshold = j.at("threshold").get<double>();
  p.weights = from_std(j.at("weights").get<std::vector<double>>());
  p.active = j.at("active").get<std::vector<bool>>();
  p.condition = j.at("condition").get<double>();
  p.ridge = j.at("ridge").get<bool>();
  const int expect = sim::minimal_param_count(p.kinematics.dof()) + (p.friction ? 2 : 0);
  if (p.weights.size() != expect || static_cast<int>(p.active.size()) != expect) {
    throw FormatError("model file: parametric weights have the wrong length");
  }
  return p;
}

json gp_to_json(const GPModel& gp) {
  const Eigen::Index N = gp.X.rows(), D = gp.X.cols();
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> Xr = gp.X;
  std::vector<double> packed;
  packed.reserve(static_cast<std::size_t>(N * (N + 1) / 2));
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index k = 0; k <= i; ++k) packed.push_back(gp.factor(i, k));
  }
  return {{"kernel", kernel_to_json(gp.kernel)},
          {"noise_variance", gp.noise_variance},
          {"jitter", gp.jitter},
          {"rows", N},
          {"cols", D},
          {"X", blob(Xr.data(), static_cast<std::size_t>(N * D))},
          {"y", vector_blob(gp.y)},
          {"prior_mean", vector_blob(gp.prior_mean)},
          {"alpha", vector_blob(gp.alpha)},
          {"factor", blob(packed.data(), packed.size())}};
}

GPModel gp_from_json(const json& j) {
  GPModel gp;
  gp.kernel = kernel_from_json(j.at("kernel"));
  gp.noise_variance = j.at("noise_variance").get<double>();
  gp.jitter = j.at("jitter").get<double>();
  const auto N = j.at("rows").get<Eigen::Index>();
  const auto D = j.at("cols").get<Eigen::Index>();
  if (N < 1 || D < 1) throw FormatError("model file: empty GP training set");
  const auto xs = unblob(j.at("X"), static_cast<std::size_t>(N * D));
  gp.X = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      xs.data(), N, D);
  gp.y = vector_unblob(j.at("y"), N);
  gp.prior_mean = vector_unblob(j.at("prior_mean"), N);
  gp.alpha = vector_unblob(j.at("alpha"), N);
  const auto packed = unblob(j.at("factor"), static_cast<std::size_t>(N * (N + 1) / 2));
  gp.factor = MatrixXd::Zero(N, N);
  std::size_t p = 0;
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index k = 0; k <= i; ++k) gp.factor(i, k) = packed[p++];
  }
  validate(gp.kernel, static_cast<int>(D));
  return gp;
}

}  // namespace

std::vector<std::uint8_t> serialize_estimator(const Estimator& est) {
  json j = {{"format", "gpcd-estimator"},
            {"version", kModelFormatVersion},
            {"variant", variant_name(est.variant)},
            {"joint", est.joint},
            {"threshold", est.threshold},
            {"parametric", parametric_to_json(est.parametric)},
            {"scaler", {{"mean", to_std(est.scaler.mean)}, {"scale", to_std(est.scaler.scale)}}},
            {"gp", est.gp ? gp_to_json(*est.gp) : json(nullptr)}};
  return json::to_cbor(j);
}

Estimator deserialize_estimator(const std::vector<std::uint8_t>& bytes) {
  json j;
  try {
    j = json::from_cbor(bytes);
  } catch (const json::exception& e) {
    throw FormatError(std::string("model file is not valid CBOR: ") + e.what());
  }
  try {
    if (!j.is_object() || j.value("format", "") != "gpcd-estimator") {
      throw FormatError("not a gpcd estimator file");
    }
    const int version = j.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw VersionMismatchError("model file version " + std::to_string(version) +
                                 " is not supported (expected " +
                                 std::to_string(kModelFormatVersion) + ")");
    }
    Estimator est;
    est.variant = parse_variant(j.at("variant").get<std::string>());
    est.joint = j.at("joint").get<int>();
    est.threshold = j.at("threshold").get<double>();
    est.parametric = parametric_from_json(j.at("parametric"));
    est.scaler.mean = from_std(j.at("scaler").at("mean").get<std::vector<double>>());
    est.scaler.scale = from_std(j.at("scaler").at("scale").get<std::vector<double>>());
    if (!j.at("gp").is_null()) est.gp = gp_from_json(j.at("gp"));
    if ((est.variant == Variant::kParametric) == est.gp.has_value()) {
      throw FormatError("model file: GP presence does not match the variant");
    }
    return est;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed model file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("malformed model file: ") + e.what());
  }
}

void save_estimator(const std::filesystem::path& path, const Estimator& est) {
  const auto bytes = serialize_estimator(est);
  io::write_file(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

Estimator load_estimator(const std::filesystem::path& path) {
  const std::string s = io::read_file(path);
  return deserialize_estimator(std::vector<std::uint8_t>(s.begin(), s.end()));
}

}  // namespace gpcd
