// tools/cli/config.h

// Copyright 2026 The vpc Authors.

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef VPC_TOOLS_CLI_CONFIG_H_
#define VPC_TOOLS_CLI_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace vpc::cli {

// Invalid configuration or arguments (exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat key/value configuration.
//
//   # comment
//   key = value
//   encoder.layers = 2        # trailing comment
//   name = "quoted # value"
//
// Keys are [A-Za-z_][A-Za-z0-9_.-]*. A key may appear once per file; --set
// overrides replace file values.
class KeyValueConfig {
 public:
  static KeyValueConfig Parse(std::string_view text, const std::string& origin = "<string>");
  static KeyValueConfig Load(const std::filesystem::path& path);

  // "key=value" as given to --set.
  void Override(const std::string& assignment);
  void Set(const std::string& key, const std::string& value) { values_[key] = value; }

  bool Has(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> Get(const std::string& key) const;
  // Removes and returns the value; the remaining keys are forwarded elsewhere.
  std::optional<std::string> Take(const std::string& key);

  std::string GetString(const std::string& key, const std::string& fallback) const;
  double GetDouble(const std::string& key, double fallback) const;
  std::int64_t GetInt(const std::string& key, std::int64_t fallback) const;
  bool GetBool(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  nlohmann::json ToJson() const;

 private:
  std::map<std::string, std::string> values_;
};

std::filesystem::path ArtifactRoot();

struct RunManifest {
  std::string command;
  std::string config_path;
  nlohmann::json resolved_config;
  std::optional<std::uint64_t> seed;
  std::map<std::string, std::string> artifacts;
  std::vector<std::string> argv;

  nlohmann::json ToJson() const;
  // Writes manifest.json into dir.
  void Write(const std::filesystem::path& dir) const;
};

std::string ToolVersion();

// Structured error record written as error.json (when dir is set) and echoed
// to standard error.
void ReportError(const std::filesystem::path& dir, const std::string& command, int exit_code,
                 const std::string& kind, const std::string& message);

}  // namespace vpc::cli

#endif  // VPC_TOOLS_CLI_CONFIG_H_
