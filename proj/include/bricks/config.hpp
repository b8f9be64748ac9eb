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

// Client configuration.
//
// Values come from, in decreasing priority: command-line flags, the
// BRICKS_LIBRARY / BRICKS_REGISTRY / BRICKS_TOKEN environment variables, and
// a flat `key=value` file at $BRICKS_CONFIG, $XDG_CONFIG_HOME/bricks/config
// or ~/.config/bricks/config.

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace bricks {

namespace fs = std::filesystem;

using Environment = std::map<std::string, std::string>;

/// Snapshot of the process environment.
Environment process_environment();

enum class ConfigSource { kDefault, kFile, kEnv, kFlag };
std::string_view source_name(ConfigSource source);

inline constexpr std::string_view kDefaultOrg = "biobricks-ai";
inline constexpr std::string_view kRedacted = "****";

using ConfigValues = std::map<std::string, std::string>;

/// Recognized keys: library, registry, token, parallel, default_org.
ConfigValues parse_config_text(std::string_view text);
/// Sorted `key=value` lines.
std::string serialize_config(const ConfigValues& values);

fs::path config_path(const Environment& env);

struct Config {
  std::string library;
  std::string registry;
  std::string token;
  int parallel = 4;
  std::string default_org{kDefaultOrg};
  std::map<std::string, ConfigSource> sources;

  ConfigSource source(const std::string& key) const;
  /// `key=value (source)` lines with the token redacted.
  std::string describe() const;
};

/// Resolves the effective config. `flags` holds values given on the command
/// line. Throws kNotConfigured on a malformed file or value.
Config load_config(const Environment& env, const ConfigValues& flags = {});

/// Merges `updates` into the file at `path`. Returns false if the file
/// already held exactly these values.
bool update_config_file(const fs::path& path, const ConfigValues& updates);

std::string redact(std::string_view token);

}  // namespace bricks
