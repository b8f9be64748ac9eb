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

// Library layout, brick installation, asset catalogs and dependency sets.
//
// A library is a directory holding `cache/` (a ContentStore) and one
// directory per installed brick version at `<org>/<name>/<commit>`. Installs
// are assembled in a hidden staging directory next to the final location and
// renamed into place only when complete, so a brick directory is either
// absent or fully materialized.

#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bricks/content_store.hpp"
#include "bricks/error.hpp"
#include "bricks/model.hpp"
#include "bricks/registry.hpp"

namespace bricks {

namespace fs = std::filesystem;

inline constexpr std::string_view kInstalledStamp = ".installed";

struct LibraryLayout {
  fs::path root;

  fs::path cache() const { return root / "cache"; }
  fs::path brick_dir(std::string_view org, std::string_view name, std::string_view commit) const {
    return root / std::string(org) / std::string(name) / std::string(commit);
  }
};

bool is_installed(const fs::path& brick_dir);

enum class InstallStep { kSnapshot, kEnumerate, kFetch, kLink };
std::string_view step_name(InstallStep step);

struct InstallHooks {
  /// Runs after each step completes, in order.
  std::function<void(InstallStep)> after_step;
  /// Progress and diagnostics.
  std::function<void(const std::string&)> log;
  LinkMode link_mode = LinkMode::kSymlink;
};

struct InstallResult {
  fs::path path;
  BrickRef ref;  // commit fully resolved
  bool already_installed = false;
  std::size_t fetched = 0;
  std::size_t total = 0;
  std::vector<InstallStep> steps;

  /// `installed <org>/<name>@<commit> (<n_fetched>/<n_total> blobs fetched)`
  std::string summary() const;
};

/// Snapshot, enumerate payload outs, fetch absent blobs, link. A no-op if
/// the resolved commit is already installed.
InstallResult install(const LibraryLayout& lib, RegistryClient& client, const BrickRef& ref,
                      const InstallHooks& hooks = {});

// ---------------------------------------------------------------------------
// Assets

enum class AssetFormat { kParquet, kSqlite, kHdt, kOther };
std::string_view format_name(AssetFormat format);
AssetFormat format_for_path(std::string_view path);

/// `brick/a/b.parquet` -> `a_b_parquet`.
std::string asset_name(std::string_view payload_path);

struct Asset {
  std::string name;
  fs::path path;  // absolute
  AssetFormat format = AssetFormat::kOther;
  std::string lock_path;
  ContentHash hash;
};

struct AssetCatalog {
  std::vector<Asset> entries;  // lock order

  const Asset* find(std::string_view name) const;
};

/// Builds the catalog for a brick rooted at `brick_dir`. An out that is the
/// whole `brick/` directory contributes one asset per member file, read from
/// its dir manifest in `store`. Throws kAssetNameCollision.
AssetCatalog build_catalog(const Lockfile& lock, const fs::path& brick_dir,
                           const ContentStore& store);

struct InstalledBrick {
  BrickRef ref;
  fs::path path;
  std::string installed_at;
};

std::vector<InstalledBrick> list_installed(const LibraryLayout& lib);

/// Installed directory selected by `ref`: the exact or prefix-matching
/// commit, or for "latest" the most recently installed one.
fs::path find_installed(const LibraryLayout& lib, const BrickRef& ref);

AssetCatalog assets(const LibraryLayout& lib, const BrickRef& ref);

/// Digests in the cache that no installed brick references.
std::vector<std::string> unreferenced_blobs(const LibraryLayout& lib);

// ---------------------------------------------------------------------------
// Dependency sets

fs::path dependencies_path(const fs::path& workdir);

/// Creates `.bb/dependencies.txt` with only a header if it does not exist.
void deps_init(const fs::path& workdir);

struct AddResult {
  DependencySet deps;
  DependencyEntry entry;
  bool updated = false;  // an existing pin was replaced
};

AddResult deps_add(const fs::path& workdir, RegistryClient& client, const BrickRef& ref);

struct PullEntry {
  enum class Status { kInstalled, kPresent, kFailed };
  BrickRef ref;
  Status status = Status::kFailed;
  fs::path path;
  std::optional<Error> error;
};

struct PullReport {
  std::vector<PullEntry> entries;  // file order

  bool ok() const;
  std::vector<fs::path> paths() const;
  std::size_t installed() const;
};

/// Installs every entry not already present at its pinned commit; keeps
/// going past failures.
PullReport deps_pull(const fs::path& workdir, const LibraryLayout& lib, RegistryClient& client,
                     const InstallHooks& hooks = {});

}  // namespace bricks
