// Copyright 2026 The Bricks Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "bricks/config.hpp"

#include <array>
#include <charconv>
#include <sstream>

#include "bricks/error.hpp"
#include "bricks/fsutil.hpp"

extern char** environ;

namespace bricks {

namespace {

constexpr std::array<std::string_view, 5> kKeys = {"library", "registry", "token", "parallel",
                                                   "default_org"};

bool known_key(std::string_view key) {
  for (auto k : kKeys) {
    if (k == key) return true;
  }
  return false;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

int parse_parallel(const std::string& text) {
  int v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || p != text.data() + text.size() || v < 1) {
    fail(Errc::kNotConfigured, "parallel must be an integer >= 1, got '" + text + "'");
  }
  return v;
}

std::optional<std::string> lookup(const Environment& env, const std::string& key) {
  auto it = env.find(key);
  if (it == env.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

}  // namespace

Environment process_environment() {
  Environment env;
  for (char** e = environ; *e; ++e) {
    std::string_view kv(*e);
    auto eq = kv.find('=');
    if (eq == std::string_view::npos) continue;
    env.emplace(std::string(kv.substr(0, eq)), std::string(kv.substr(eq + 1)));
  }
  return env;
}

std::string_view source_name(ConfigSource source) {
  switch (source) {
    case ConfigSource::kDefault: return "default";
    case ConfigSource::kFile: return "file";
    case ConfigSource::kEnv: return "env";
    case ConfigSource::kFlag: return "flag";
  }
  return "?";
}

ConfigValues parse_config_text(std::string_view text) {
  ConfigValues values;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos) {
      fail(Errc::kNotConfigured, "config line " + std::to_string(lineno) + ": expected key=value");
    }
    auto key = trim(std::string_view(t).substr(0, eq));
    if (!known_key(key)) {
      fail(Errc::kNotConfigured, "config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    values[key] = trim(std::string_view(t).substr(eq + 1));
  }
  return values;
}

std::string serialize_config(const ConfigValues& values) {
  std::string out;
  for (const auto& [k, v] : values) out += k + "=" + v + "\n";
  return out;
}

fs::path config_path(const Environment& env) {
  if (auto p = lookup(env, "BRICKS_CONFIG")) return *p;
  if (auto p = lookup(env, "XDG_CONFIG_HOME")) return fs::path(*p) / "bricks" / "config";
  if (auto p = lookup(env, "HOME")) return fs::path(*p) / ".config" / "bricks" / "config";
  return fs::path(".bricks-config");
}

ConfigSource Config::source(const std::string& key) const {
  auto it = sources.find(key);
  return it == sources.end() ? ConfigSource::kDefault : it->second;
}

std::string Config::describe() const {
  std::string out;
  auto line = [&](const std::string& key, const std::string& value) {
    out += key + "=" + value + " (" + std::string(source_name(source(key))) + ")\n";
  };
  line("library", library);
  line("registry", registry);
  line("token", redact(token));
  line("parallel", std::to_string(parallel));
  line("default_org", default_org);
  return out;
}

Config load_config(const Environment& env, const ConfigValues& flags) {
  Config config;
  ConfigValues merged;
  auto path = config_path(env);
  std::error_code ec;
  if (fs::is_regular_file(path, ec)) {
    for (auto& [k, v] : parse_config_text(fsutil::read_file(path))) {
      merged[k] = v;
      config.sources[k] = ConfigSource::kFile;
    }
  }
  static const std::array<std::pair<const char*, const char*>, 3> kEnvKeys = {{
      {"BRICKS_LIBRARY", "library"},
      {"BRICKS_REGISTRY", "registry"},
      {"BRICKS_TOKEN", "token"},
  }};
  for (auto [var, key] : kEnvKeys) {
    if (auto v = lookup(env, var)) {
      merged[key] = *v;
      config.sources[key] = ConfigSource::kEnv;
    }
  }
  for (const auto& [k, v] : flags) {
    if (!known_key(k)) fail(Errc::kUsageError, "unknown config key '" + k + "'");
    merged[k] = v;
    config.sources[k] = ConfigSource::kFlag;
  }

  if (auto it = merged.find("library"); it != merged.end() && !it->second.empty()) {
    config.library = fs::absolute(it->second).lexically_normal().string();
  }
  if (auto it = merged.find("registry"); it != merged.end()) config.registry = it->second;
  if (auto it = merged.find("token"); it != merged.end()) config.token = it->second;
  if (auto it = merged.find("parallel"); it != merged.end()) {
    config.parallel = parse_parallel(it->second);
  }
  if (auto it = merged.find("default_org"); it != merged.end() && !it->second.empty()) {
    config.default_org = it->second;
  }
  return config;
}

bool update_config_file(const fs::path& path, const ConfigValues& updates) {
  ConfigValues values;
  std::string before;
  std::error_code ec;
  if (fs::is_regular_file(path, ec)) {
    before = fsutil::read_file(path);
    values = parse_config_text(before);
  }
  for (const auto& [k, v] : updates) {
    if (!known_key(k)) fail(Errc::kUsageError, "unknown config key '" + k + "'");
    values[k] = v;
  }
  auto after = serialize_config(values);
  if (after == before) return false;
  fsutil::write_file_atomic(path, after);
  fs::permissions(path, fs::perms::owner_read | fs::perms::owner_write, ec);
  return true;
}

std::string redact(std::string_view token) {
  return token.empty() ? std::string() : std::string(kRedacted);
}

}  // namespace bricks
