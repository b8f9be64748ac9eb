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

// The three files that define a brick (`brick.yaml`, `brick.lock`,
// `.bb/dependencies.txt`) and the `org/name@commit` coordinate grammar.
//
// All parsers are pure functions over text and throw bricks::Error on
// malformed input. Every serializer is canonical: parse(serialize(v)) == v,
// and serialize(parse(x)) == x for text that serialize produced.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bricks/hash.hpp"

namespace bricks {

inline constexpr std::string_view kLatest = "latest";
inline constexpr std::size_t kMinCommitPrefix = 5;
inline constexpr std::size_t kFullCommitLength = 40;

/// Identifies one brick version: `org/name` plus a commit selector which is
/// either "latest", a hex prefix of at least kMinCommitPrefix chars, or a full
/// 40-hex commit id.
struct BrickRef {
  std::string org;
  std::string name;
  std::string commit{kLatest};
  std::optional<std::string> source_url;

  bool is_latest() const { return commit == kLatest; }
  bool is_pinned() const { return commit.size() == kFullCommitLength; }

  /// `org/name`, without the commit.
  std::string id() const { return org + "/" + name; }
  /// Re-renders in a form parse_brick_ref accepts and maps back to *this.
  std::string str() const;

  friend bool operator==(const BrickRef&, const BrickRef&) = default;
};

bool is_identifier(std::string_view text);

/// Accepts `name`, `org/name`, `org/name@<hex>` and URL forms
/// `scheme://host/.../org/name[.git][@<hex>]`.
BrickRef parse_brick_ref(std::string_view text, std::string_view default_org);

// ---------------------------------------------------------------------------
// Manifest (brick.yaml)

/// A workspace-relative path. A trailing '/' marks a directory.
std::string normalize_workspace_path(std::string_view raw);
/// The path without its directory marker; used for comparisons.
std::string_view path_key(std::string_view path);
/// True when the paths are equal or one is an ancestor directory of the other.
bool paths_overlap(std::string_view a, std::string_view b);

struct Stage {
  std::string name;
  std::string cmd;
  std::vector<std::string> deps;
  std::vector<std::string> outs;

  friend bool operator==(const Stage&, const Stage&) = default;
};

struct Manifest {
  std::vector<Stage> stages;

  const Stage* find(std::string_view name) const;

  /// upstream[i] lists the stages whose outs overlap a dep of stage i.
  std::vector<std::vector<std::size_t>> upstream() const;
  /// Stage indices in dependency order, ties broken by file order.
  /// Throws Errc::kCycleError.
  std::vector<std::size_t> topological_order() const;

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

/// Checks every Stage/Manifest invariant; throws kSyntaxError,
/// kDuplicateOutput or kCycleError.
void validate_manifest(const Manifest& manifest);

Manifest parse_manifest(std::string_view text);
std::string serialize_manifest(const Manifest& manifest);

// ---------------------------------------------------------------------------
// Lockfile (brick.lock)

struct LockEntry {
  std::string path;
  ContentHash hash;
  std::uint64_t size = 0;

  friend bool operator==(const LockEntry&, const LockEntry&) = default;
};

struct LockStage {
  std::string name;
  std::string cmd;
  std::vector<LockEntry> deps;
  std::vector<LockEntry> outs;

  const LockEntry* find_dep(std::string_view path) const;
  const LockEntry* find_out(std::string_view path) const;

  friend bool operator==(const LockStage&, const LockStage&) = default;
};

struct Lockfile {
  std::vector<LockStage> stages;

  const LockStage* find(std::string_view name) const;
  /// Replaces the entry with the same name or appends.
  void upsert(LockStage stage);

  friend bool operator==(const Lockfile&, const Lockfile&) = default;
};

/// Directory holding a brick's distributable data.
inline constexpr std::string_view kPayloadDir = "brick";

/// True for `brick/` itself and anything beneath it.
bool is_payload_path(std::string_view path);

/// Outs under `brick/`, in lock order, each listed once.
std::vector<LockEntry> payload_outs(const Lockfile& lock);

Lockfile parse_lockfile(std::string_view text);
std::string serialize_lockfile(const Lockfile& lock);

// ---------------------------------------------------------------------------
// Dependency set (.bb/dependencies.txt)

struct DependencyEntry {
  BrickRef ref;  // commit is always a full 40-hex id
  std::string url;

  friend bool operator==(const DependencyEntry&, const DependencyEntry&) = default;
};

struct DependencySet {
  std::vector<DependencyEntry> entries;

  const DependencyEntry* find(std::string_view org, std::string_view name) const;
  /// Returns true if an existing pin was replaced, false if appended.
  bool upsert(DependencyEntry entry);

  friend bool operator==(const DependencySet&, const DependencySet&) = default;
};

inline constexpr std::string_view kDependenciesHeader =
    "# brick dependencies: <org>/<name> <commit> <url>\n";

DependencySet parse_dependencies(std::string_view text);
std::string serialize_dependencies(const DependencySet& deps);

}  // namespace bricks
