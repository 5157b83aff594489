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

#ifndef GPCD_MODEL_IO_HPP_
#define GPCD_MODEL_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <vector>

#include "gpcd/estimators.hpp"

namespace gpcd {

/// Version written into every model file. Loading any other version fails.
inline constexpr int kModelFormatVersion = 1;

/// Model file layout (CBOR map):
///   format    "gpcd-estimator"
///   version   kModelFormatVersion
///   variant   "P_f" | "SP_S" | "SP_P"
///   joint, threshold
///   parametric {lengths, gravity, joint, motor{...}, friction, threshold,
///               weights, active, condition, ridge}
///   scaler    {mean, scale}
///   gp        null or {kernel (tagged tree), noise_variance, jitter, rows,
///               cols, X, y, prior_mean, alpha, factor}
/// Matrices are little-endian float64 byte strings; X is row-major and
/// factor holds the packed lower triangle row by row.
std::vector<std::uint8_t> serialize_estimator(const Estimator& est);
Estimator deserialize_estimator(const std::vector<std::uint8_t>& bytes);

void save_estimator(const std::filesystem::path& path, const Estimator& est);
Estimator load_estimator(const std::filesystem::path& path);

}  // namespace gpcd

#endif  // GPCD_MODEL_IO_HPP_
