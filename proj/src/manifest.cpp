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

#include <algorithm>
#include <queue>
#include <set>

#include "bricks/error.hpp"
#include "bricks/model.hpp"
#include "yaml_text.hpp"

namespace bricks {

namespace {

constexpr std::string_view kWhat = "brick.yaml";

}  // namespace

std::string normalize_workspace_path(std::string_view raw) {
  if (raw.empty()) fail(Errc::kSyntaxError, "empty path");
  if (raw.front() == '/') fail(Errc::kSyntaxError, "absolute path '" + std::string(raw) + "'");
  bool dir = raw.back() == '/';
  std::string out;
  std::size_t start = 0;
  while (start <= raw.size()) {
    auto end = raw.find('/', start);
    if (end == std::string_view::npos) end = raw.size();
    auto seg = raw.substr(start, end - start);
    start = end + 1;
    if (seg.empty() || seg == ".") continue;
    if (seg == "..") fail(Errc::kSyntaxError, "path escapes workspace '" + std::string(raw) + "'");
    if (!out.empty()) out += '/';
    out += seg;
  }
  if (out.empty()) fail(Errc::kSyntaxError, "path names the workspace root '" + std::string(raw) + "'");
  if (dir) out += '/';
  return out;
}

std::string_view path_key(std::string_view path) {
  while (path.ends_with('/')) path.remove_suffix(1);
  return path;
}

bool paths_overlap(std::string_view a, std::string_view b) {
  a = path_key(a);
  b = path_key(b);
  if (a == b) return true;
  auto ancestor = [](std::string_view dir, std::string_view p) {
    return p.size() > dir.size() && p.starts_with(dir) && p[dir.size()] == '/';
  };
  return ancestor(a, b) || ancestor(b, a);
}

const Stage* Manifest::find(std::string_view name) const {
  for (const auto& s : stages) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

std::vector<std::vector<std::size_t>> Manifest::upstream() const {
  std::vector<std::vector<std::size_t>> up(stages.size());
  for (std::size_t b = 0; b < stages.size(); ++b) {
    for (std::size_t a = 0; a < stages.size(); ++a) {
      if (a == b) continue;
      bool edge = false;
      for (const auto& out : stages[a].outs) {
        for (const auto& dep : stages[b].deps) {
          if (paths_overlap(out, dep)) {
            edge = true;
            break;
          }
        }
        if (edge) break;
      }
      if (edge) up[b].push_back(a);
    }
  }
  return up;
}

std::vector<std::size_t> Manifest::topological_order() const {
  auto up = upstream();
  std::vector<std::size_t> indegree(stages.size());
  std::vector<std::vector<std::size_t>> down(stages.size());
  for (std::size_t b = 0; b < stages.size(); ++b) {
    indegree[b] = up[b].size();
    for (auto a : up[b]) down[a].push_back(b);
  }
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    if (indegree[i] == 0) ready.push(i);
  }
  std::vector<std::size_t> order;
  while (!ready.empty()) {
    auto i = ready.top();
    ready.pop();
    order.push_back(i);
    for (auto d : down[i]) {
      if (--indegree[d] == 0) ready.push(d);
    }
  }
  if (order.size() != stages.size()) {
    std::string names;
    for (std::size_t i = 0; i < stages.size(); ++i) {
      if (indegree[i] != 0) names += (names.empty() ? "" : ", ") + stages[i].name;
    }
    fail(Errc::kCycleError, "stage graph has a cycle through: " + names);
  }
  return order;
}

void validate_manifest(const Manifest& manifest) {
  std::set<std::string> names;
  std::set<std::string, std::less<>> outs;
  for (const auto& stage : manifest.stages) {
    if (!is_identifier(stage.name)) {
      fail(Errc::kSyntaxError, "illegal stage name '" + stage.name + "'");
    }
    if (!names.insert(stage.name).second) {
      fail(Errc::kSyntaxError, "duplicate stage '" + stage.name + "'");
    }
    for (const auto& p : stage.deps) {
      if (normalize_workspace_path(p) != p) fail(Errc::kSyntaxError, "unnormalized path '" + p + "'");
    }
    for (const auto& p : stage.outs) {
      if (normalize_workspace_path(p) != p) fail(Errc::kSyntaxError, "unnormalized path '" + p + "'");
      for (const auto& d : stage.deps) {
        if (path_key(d) == path_key(p)) {
          fail(Errc::kSyntaxError,
               "stage '" + stage.name + "' lists '" + p + "' as both dep and out");
        }
      }
      if (!outs.insert(std::string(path_key(p))).second) {
        fail(Errc::kDuplicateOutput, "output '" + p + "' is produced by more than one stage");
      }
    }
  }
  manifest.topological_order();
}

Manifest parse_manifest(std::string_view text) {
  auto root = yaml_text::load(text, kWhat);
  if (!root.IsMap()) yaml_text::syntax(kWhat, "top level must be a map");
  auto stages = root["stages"];
  if (!stages) yaml_text::syntax(kWhat, "missing 'stages'");
  Manifest manifest;
  if (stages.IsNull()) return manifest;
  if (!stages.IsMap()) yaml_text::syntax(kWhat, "'stages' must be a map");
  for (const auto& kv : stages) {
    Stage stage;
    stage.name = yaml_text::scalar(kv.first, kWhat, "stage name");
    const auto& body = kv.second;
    if (!body.IsMap()) yaml_text::syntax(kWhat, "stage '" + stage.name + "' must be a map");
    for (const auto& field : body) {
      auto key = yaml_text::scalar(field.first, kWhat, "stage field");
      if (key != "cmd" && key != "deps" && key != "outs") {
        yaml_text::syntax(kWhat, "stage '" + stage.name + "': unknown field '" + key + "'");
      }
    }
    if (!body["cmd"]) yaml_text::syntax(kWhat, "stage '" + stage.name + "' has no cmd");
    stage.cmd = yaml_text::scalar(body["cmd"], kWhat, "cmd");
    for (auto& p : yaml_text::string_list(body["deps"], kWhat, "deps")) {
      stage.deps.push_back(normalize_workspace_path(p));
    }
    for (auto& p : yaml_text::string_list(body["outs"], kWhat, "outs")) {
      stage.outs.push_back(normalize_workspace_path(p));
    }
    manifest.stages.push_back(std::move(stage));
  }
  validate_manifest(manifest);
  return manifest;
}

std::string serialize_manifest(const Manifest& manifest) {
  if (manifest.stages.empty()) return "stages: {}\n";
  std::string out = "stages:\n";
  auto list = [&out](std::string_view key, const std::vector<std::string>& items) {
    if (items.empty()) return;
    out += "    ";
    out += key;
    out += ":\n";
    for (const auto& item : items) out += "    - " + yaml_text::quote(item) + "\n";
  };
  for (const auto& stage : manifest.stages) {
    out += "  " + yaml_text::quote(stage.name) + ":\n";
    out += "    cmd: " + yaml_text::quote(stage.cmd) + "\n";
    list("deps", stage.deps);
    list("outs", stage.outs);
  }
  return out;
}

}  // namespace bricks
