// tools/cli/config.cc

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

#include "cli/config.h"

#include <cctype>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace vpc::cli {

namespace fs = std::filesystem;

namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool ValidKey(std::string_view k) {
  if (k.empty() || !(std::isalpha(static_cast<unsigned char>(k[0])) || k[0] == '_')) return false;
  for (char c : k) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-')) {
      return false;
    }
  }
  return true;
}

// Value text after '=': optional quotes, then an optional '#' comment.
std::string ParseValue(std::string_view raw, const std::string& where) {
  raw = Trim(raw);
  if (!raw.empty() && raw.front() == '"') {
    const std::size_t close = raw.find('"', 1);
    if (close == std::string_view::npos) throw ConfigError(where + ": unterminated quote");
    const std::string_view rest = Trim(raw.substr(close + 1));
    if (!rest.empty() && rest.front() != '#') {
      throw ConfigError(where + ": unexpected text after quoted value");
    }
    return std::string(raw.substr(1, close - 1));
  }
  const std::size_t hash = raw.find('#');
  if (hash != std::string_view::npos) raw = raw.substr(0, hash);
  return std::string(Trim(raw));
}

}  // namespace

KeyValueConfig KeyValueConfig::Parse(std::string_view text, const std::string& origin) {
  KeyValueConfig cfg;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    const std::string where = origin + ":" + std::to_string(line_no);
    const std::string_view t = Trim(line);
    if (t.empty() || t.front() == '#') continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key(Trim(t.substr(0, eq)));
    if (!ValidKey(key)) throw ConfigError(where + ": invalid key '" + key + "'");
    if (cfg.Has(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
    cfg.values_[key] = ParseValue(t.substr(eq + 1), where);
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::Load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return Parse(ss.str(), path.string());
}

void KeyValueConfig::Override(const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + assignment + "'");
  const std::string key(Trim(std::string_view(assignment).substr(0, eq)));
  if (!ValidKey(key)) throw ConfigError("--set: invalid key '" + key + "'");
  values_[key] = std::string(Trim(std::string_view(assignment).substr(eq + 1)));
}

std::optional<std::string> KeyValueConfig::Get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::string> KeyValueConfig::Take(const std::string& key) {
  auto v = Get(key);
  values_.erase(key);
  return v;
}

std::string KeyValueConfig::GetString(const std::string& key, const std::string& fallback) const {
  return Get(key).value_or(fallback);
}

double KeyValueConfig::GetDouble(const std::string& key, double fallback) const {
  const auto v = Get(key);
  if (!v) return fallback;
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || p != v->data() + v->size()) {
    throw ConfigError("key '" + key + "': expected a number, got '" + *v + "'");
  }
  return out;
}

std::int64_t KeyValueConfig::GetInt(const std::string& key, std::int64_t fallback) const {
  const auto v = Get(key);
  if (!v) return fallback;
  std::int64_t out = 0;
  const auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || p != v->data() + v->size()) {
    throw ConfigError("key '" + key + "': expected an integer, got '" + *v + "'");
  }
  return out;
}

bool KeyValueConfig::GetBool(const std::string& key, bool fallback) const {
  const auto v = Get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1") return true;
  if (*v == "false" || *v == "0") return false;
  throw ConfigError("key '" + key + "': expected true or false, got '" + *v + "'");
}

nlohmann::json KeyValueConfig::ToJson() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : values_) j[k] = v;
  return j;
}

fs::path ArtifactRoot() {
  const char* env = std::getenv("VPC_ARTIFACT_ROOT");
  return env != nullptr && *env != '\0' ? fs::path(env) : fs::path("artifacts");
}

std::string ToolVersion() { return VPC_TOOL_VERSION; }

nlohmann::json RunManifest::ToJson() const {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ts;
  ts << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  nlohmann::json j = {{"command", command},
                      {"config_path", config_path},
                      {"config", resolved_config},
                      {"artifacts", artifacts},
                      {"argv", argv},
                      {"tool_version", ToolVersion()},
                      {"timestamp", ts.str()}};
  j["seed"] = seed ? nlohmann::json(*seed) : nlohmann::json(nullptr);
  return j;
}

void RunManifest::Write(const fs::path& dir) const {
  fs::create_directories(dir);
  std::ofstream out(dir / "manifest.json");
  if (!out) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
  out << ToJson().dump(2) << "\n";
}

void ReportError(const fs::path& dir, const std::string& command, int exit_code,
                 const std::string& kind, const std::string& message) {
  const nlohmann::json j = {{"error", {{"command", command},
                                       {"exit_code", exit_code},
                                       {"kind", kind},
                                       {"message", message}}}};
  std::cerr << j.dump() << "\n";
  if (dir.empty()) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream out(dir / "error.json");
  if (out) out << j.dump(2) << "\n";
}

}  // namespace vpc::cli
