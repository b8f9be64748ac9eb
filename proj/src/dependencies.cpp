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

#include <sstream>

#include "bricks/error.hpp"
#include "bricks/model.hpp"

namespace bricks {

namespace {

// Splits on runs of spaces/tabs; a token starting with '#' ends the line.
std::vector<std::string> tokenize(std::string_view line) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size() || line[i] == '#') break;
    auto start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    tokens.emplace_back(line.substr(start, i - start));
  }
  return tokens;
}

}  // namespace

const DependencyEntry* DependencySet::find(std::string_view org, std::string_view name) const {
  for (const auto& e : entries) {
    if (e.ref.org == org && e.ref.name == name) return &e;
  }
  return nullptr;
}

bool DependencySet::upsert(DependencyEntry entry) {
  for (auto& e : entries) {
    if (e.ref.org == entry.ref.org && e.ref.name == entry.ref.name) {
      e = std::move(entry);
      return true;
    }
  }
  entries.push_back(std::move(entry));
  return false;
}

DependencySet parse_dependencies(std::string_view text) {
  DependencySet deps;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.ends_with('\r')) line.remove_suffix(1);
    auto tokens = tokenize(line);
    if (tokens.empty()) continue;
    auto where = "dependencies.txt:" + std::to_string(line_no);
    if (tokens.size() != 3) {
      fail(Errc::kSyntaxError, where + ": expected '<org>/<name> <commit> <url>'");
    }
    if (tokens[0].find('/') == std::string::npos || tokens[0].find('@') != std::string::npos) {
      fail(Errc::kSyntaxError, where + ": expected '<org>/<name>', got '" + tokens[0] + "'");
    }
    const auto& commit = tokens[1];
    if (commit.size() != kFullCommitLength || !is_hex(commit)) {
      fail(Errc::kUnpinnedEntry, where + ": commit '" + commit + "' is not a full 40-hex id");
    }
    DependencyEntry entry;
    try {
      entry.ref = parse_brick_ref(tokens[0] + "@" + commit, "");
    } catch (const Error& e) {
      fail(Errc::kSyntaxError, where + ": " + e.what());
    }
    entry.url = tokens[2];
    if (deps.find(entry.ref.org, entry.ref.name)) {
      fail(Errc::kDuplicateEntry, where + ": " + entry.ref.id() + " listed twice");
    }
    deps.entries.push_back(std::move(entry));
  }
  return deps;
}

std::string serialize_dependencies(const DependencySet& deps) {
  std::string out(kDependenciesHeader);
  for (const auto& e : deps.entries) {
    out += e.ref.id() + "\t" + e.ref.commit + "\t" + e.url + "\n";
  }
  return out;
}

}  // namespace bricks
