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

#include <charconv>
#include <set>

#include "bricks/error.hpp"
#include "bricks/model.hpp"
#include "yaml_text.hpp"

namespace bricks {

namespace {

constexpr std::string_view kWhat = "brick.lock";

const LockEntry* find_entry(const std::vector<LockEntry>& entries, std::string_view path) {
  for (const auto& e : entries) {
    if (path_key(e.path) == path_key(path)) return &e;
  }
  return nullptr;
}

std::vector<LockEntry> parse_entries(const YAML::Node& node, const std::string& stage,
                                     std::string_view field) {
  std::vector<LockEntry> out;
  if (!node || node.IsNull()) return out;
  if (!node.IsSequence()) {
    yaml_text::syntax(kWhat, "stage '" + stage + "': '" + std::string(field) + "' must be a list");
  }
  for (const auto& item : node) {
    if (!item.IsMap() || !item["path"] || !item["md5"] || !item["size"]) {
      yaml_text::syntax(kWhat, "stage '" + stage + "': entries need path, md5 and size");
    }
    LockEntry entry;
    entry.path = normalize_workspace_path(yaml_text::scalar(item["path"], kWhat, "path"));
    entry.hash = ContentHash::parse(yaml_text::scalar(item["md5"], kWhat, "md5"));
    auto size = yaml_text::scalar(item["size"], kWhat, "size");
    auto [ptr, ec] = std::from_chars(size.data(), size.data() + size.size(), entry.size);
    if (ec != std::errc() || ptr != size.data() + size.size()) {
      yaml_text::syntax(kWhat, "stage '" + stage + "': bad size '" + size + "'");
    }
    out.push_back(std::move(entry));
  }
  return out;
}

void emit_entries(std::string& out, std::string_view key, const std::vector<LockEntry>& entries) {
  if (entries.empty()) return;
  out += "    ";
  out += key;
  out += ":\n";
  for (const auto& e : entries) {
    out += "    - path: " + yaml_text::quote(e.path) + "\n";
    out += "      md5: " + e.hash.str() + "\n";
    out += "      size: " + std::to_string(e.size) + "\n";
  }
}

}  // namespace

const LockEntry* LockStage::find_dep(std::string_view path) const {
  return find_entry(deps, path);
}

const LockEntry* LockStage::find_out(std::string_view path) const {
  return find_entry(outs, path);
}

const LockStage* Lockfile::find(std::string_view name) const {
  for (const auto& s : stages) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

void Lockfile::upsert(LockStage stage) {
  for (auto& s : stages) {
    if (s.name == stage.name) {
      s = std::move(stage);
      return;
    }
  }
  stages.push_back(std::move(stage));
}

bool is_payload_path(std::string_view path) {
  auto key = path_key(path);
  return key == kPayloadDir ||
         (key.size() > kPayloadDir.size() && key.starts_with(kPayloadDir) &&
          key[kPayloadDir.size()] == '/');
}

std::vector<LockEntry> payload_outs(const Lockfile& lock) {
  std::vector<LockEntry> out;
  std::set<std::string, std::less<>> seen;
  for (const auto& stage : lock.stages) {
    for (const auto& e : stage.outs) {
      if (is_payload_path(e.path) && seen.insert(std::string(path_key(e.path))).second) {
        out.push_back(e);
      }
    }
  }
  return out;
}

Lockfile parse_lockfile(std::string_view text) {
  auto root = yaml_text::load(text, kWhat);
  if (!root.IsMap()) yaml_text::syntax(kWhat, "top level must be a map");
  auto stages = root["stages"];
  if (!stages) yaml_text::syntax(kWhat, "missing 'stages'");
  Lockfile lock;
  if (stages.IsNull()) return lock;
  if (!stages.IsMap()) yaml_text::syntax(kWhat, "'stages' must be a map");
  std::set<std::string> seen;
  for (const auto& kv : stages) {
    LockStage stage;
    stage.name = yaml_text::scalar(kv.first, kWhat, "stage name");
    if (!seen.insert(stage.name).second) yaml_text::syntax(kWhat, "duplicate stage '" + stage.name + "'");
    const auto& body = kv.second;
    if (!body.IsMap()) yaml_text::syntax(kWhat, "stage '" + stage.name + "' must be a map");
    if (body["cmd"]) stage.cmd = yaml_text::scalar(body["cmd"], kWhat, "cmd");
    stage.deps = parse_entries(body["deps"], stage.name, "deps");
    stage.outs = parse_entries(body["outs"], stage.name, "outs");
    lock.stages.push_back(std::move(stage));
  }
  return lock;
}

std::string serialize_lockfile(const Lockfile& lock) {
  if (lock.stages.empty()) return "stages: {}\n";
  std::string out = "stages:\n";
  for (const auto& stage : lock.stages) {
    out += "  " + yaml_text::quote(stage.name) + ":\n";
    out += "    cmd: " + yaml_text::quote(stage.cmd) + "\n";
    emit_entries(out, "deps", stage.deps);
    emit_entries(out, "outs", stage.outs);
  }
  return out;
}

}  // namespace bricks
