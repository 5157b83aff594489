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

#ifndef GPCD_CONFIG_HPP_
#define GPCD_CONFIG_HPP_

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace gpcd {

/// Flat view of a nested key/value text file.
///
///   # comment
///   seed = 3
///   [optimizer]          # following keys become optimizer.<key>
///   iterations = 200
///   [detector.rule]      # sections nest with dots
///   margin = 1.5
///   plant.mass = 2, 1    # dotted keys work anywhere; lists are comma separated
///
/// Every key must be consumed by the reader; leftovers are reported by
/// check_consumed().
class Config {
 public:
  static Config parse(std::string_view text, const std::string& source = "<string>");
  static Config load(const std::filesystem::path& path);

  /// Insert or replace a key (command-line overrides).
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long get_int(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key,
                                  const std::vector<double>& fallback) const;
  std::vector<std::string> get_strings(const std::string& key,
                                       const std::vector<std::string>& fallback) const;

  /// Throws FormatError naming any key no getter asked for.
  void check_consumed() const;

  /// Canonical text form, keys sorted.
  std::string to_string() const;
  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  const std::string* find(const std::string& key) const;

  std::string source_;
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> consumed_;
};

}  // namespace gpcd

#endif  // GPCD_CONFIG_HPP_
