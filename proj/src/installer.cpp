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

#include "bricks/installer.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <map>
#include <set>

#include "bricks/fsutil.hpp"

namespace bricks {

namespace {

constexpr std::string_view kStagingPrefix = ".staging-";
constexpr std::string_view kLocksDir = ".locks";

// Fixed-width UTC timestamp so lexicographic order is chronological.
std::string utc_timestamp() {
  auto now = std::chrono::system_clock::now();
  auto secs = std::chrono::system_clock::to_time_t(now);
  auto micros = std::chrono::duration_cast<std::chrono::microseconds>(now.time_since_epoch()).count() %
                1000000;
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%06lldZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec,
                static_cast<long long>(micros));
  return buf;
}

void log_line(const InstallHooks& hooks, const std::string& line) {
  if (hooks.log) hooks.log(line);
}

void remove_tree(const fs::path& dir) {
  std::error_code ec;
  fs::remove_all(dir, ec);
}

void remove_stale_staging(const fs::path& parent, std::string_view commit) {
  std::error_code ec;
  if (!fs::is_directory(parent, ec)) return;
  auto prefix = std::string(kStagingPrefix) + std::string(commit) + "-";
  std::vector<fs::path> stale;
  for (const auto& e : fs::directory_iterator(parent, ec)) {
    if (e.path().filename().string().starts_with(prefix)) stale.push_back(e.path());
  }
  for (const auto& p : stale) remove_tree(p);
}

Lockfile read_lock(const fs::path& brick_dir) {
  auto path = brick_dir / "brick.lock";
  std::error_code ec;
  if (!fs::exists(path, ec)) fail(Errc::kIntegrityError, "snapshot has no brick.lock");
  return parse_lockfile(fsutil::read_file(path));
}

std::string installed_at(const fs::path& brick_dir) {
  auto text = fsutil::read_file(brick_dir / kInstalledStamp);
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
  return text;
}

}  // namespace

bool is_installed(const fs::path& brick_dir) {
  std::error_code ec;
  return fs::is_regular_file(brick_dir / kInstalledStamp, ec);
}

std::string_view step_name(InstallStep step) {
  switch (step) {
    case InstallStep::kSnapshot: return "snapshot";
    case InstallStep::kEnumerate: return "enumerate";
    case InstallStep::kFetch: return "fetch";
    case InstallStep::kLink: return "link";
  }
  return "?";
}

std::string InstallResult::summary() const {
  return "installed " + ref.id() + "@" + ref.commit + " (" + std::to_string(fetched) + "/" +
         std::to_string(total) + " blobs fetched)";
}

InstallResult install(const LibraryLayout& lib, RegistryClient& client, const BrickRef& ref,
                      const InstallHooks& hooks) {
  InstallResult result;
  result.ref = ref;
  if (!ref.is_pinned()) result.ref.commit = client.resolve_commit(ref);
  const auto& commit = result.ref.commit;
  result.path = lib.brick_dir(ref.org, ref.name, commit);
  if (is_installed(result.path)) {
    result.already_installed = true;
    log_line(hooks, ref.id() + "@" + commit + " is already installed");
    return result;
  }

  auto parent = result.path.parent_path();
  fs::create_directories(parent);
  fsutil::FileLock guard(parent / kLocksDir / (commit + ".lock"));
  if (is_installed(result.path)) {
    result.already_installed = true;
    return result;
  }
  remove_stale_staging(parent, commit);

  ContentStore store(lib.cache());
  auto staging = parent / (std::string(kStagingPrefix) + commit + "-" + fsutil::random_token());
  auto step_done = [&](InstallStep step) {
    result.steps.push_back(step);
    log_line(hooks, "step " + std::string(step_name(step)) + " done");
    if (hooks.after_step) hooks.after_step(step);
  };

  try {
    // 1. snapshot
    fs::create_directories(staging);
    client.fetch_snapshot(ref.org, ref.name, commit, staging);
    step_done(InstallStep::kSnapshot);

    // 2. enumerate payload outs; directory outs need their manifests first.
    auto lock = read_lock(staging);
    auto outs = payload_outs(lock);
    std::vector<ContentHash> manifests;
    for (const auto& out : outs) {
      if (out.hash.is_dir() && !store.contains(out.hash)) manifests.push_back(out.hash);
    }
    client.fetch_blobs(store, manifests);
    result.fetched += manifests.size();
    build_catalog(lock, staging, store);
    std::vector<ContentHash> needed;
    std::set<std::string> seen;
    for (const auto& out : outs) {
      for (auto& h : store.closure(out.hash)) {
        if (seen.insert(h.digest()).second) needed.push_back(std::move(h));
      }
    }
    step_done(InstallStep::kEnumerate);

    // 3. fetch what the cache lacks
    std::vector<ContentHash> missing;
    for (const auto& h : needed) {
      if (!store.contains(h)) missing.push_back(h);
    }
    client.fetch_blobs(store, missing);
    result.fetched += missing.size();
    result.total = needed.size();
    step_done(InstallStep::kFetch);

    // 4. link, stamp, publish
    for (const auto& out : outs) {
      store.materialize(out.hash, staging / std::string(path_key(out.path)), hooks.link_mode);
    }
    fsutil::write_file_atomic(staging / kInstalledStamp, utc_timestamp() + "\n");
    step_done(InstallStep::kLink);

    std::error_code ec;
    fs::rename(staging, result.path, ec);
    if (ec) {
      if (!is_installed(result.path)) {
        fail(Errc::kIoError, "cannot publish " + result.path.string() + ": " + ec.message());
      }
      remove_tree(staging);
    }
  } catch (...) {
    remove_tree(staging);
    throw;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Assets

std::string_view format_name(AssetFormat format) {
  switch (format) {
    case AssetFormat::kParquet: return "parquet";
    case AssetFormat::kSqlite: return "sqlite";
    case AssetFormat::kHdt: return "hdt";
    case AssetFormat::kOther: return "other";
  }
  return "other";
}

AssetFormat format_for_path(std::string_view path) {
  auto key = path_key(path);
  auto dot = key.rfind('.');
  auto slash = key.rfind('/');
  if (dot == std::string_view::npos || (slash != std::string_view::npos && dot < slash)) {
    return AssetFormat::kOther;
  }
  auto ext = key.substr(dot + 1);
  if (ext == "parquet") return AssetFormat::kParquet;
  if (ext == "sqlite" || ext == "sqlite3" || ext == "db") return AssetFormat::kSqlite;
  if (ext == "hdt") return AssetFormat::kHdt;
  return AssetFormat::kOther;
}

std::string asset_name(std::string_view payload_path) {
  auto key = path_key(payload_path);
  if (key.starts_with(kPayloadDir) && key.size() > kPayloadDir.size() &&
      key[kPayloadDir.size()] == '/') {
    key.remove_prefix(kPayloadDir.size() + 1);
  }
  std::string name(key);
  std::replace(name.begin(), name.end(), '/', '_');
  std::replace(name.begin(), name.end(), '.', '_');
  return name;
}

const Asset* AssetCatalog::find(std::string_view name) const {
  for (const auto& a : entries) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

AssetCatalog build_catalog(const Lockfile& lock, const fs::path& brick_dir,
                           const ContentStore& store) {
  AssetCatalog catalog;
  std::map<std::string, std::string> owner;  // name -> lock path
  auto add = [&](std::string lock_path, ContentHash hash) {
    Asset asset;
    asset.name = asset_name(lock_path);
    asset.path = fs::absolute(brick_dir / std::string(path_key(lock_path)));
    asset.format = format_for_path(lock_path);
    asset.hash = std::move(hash);
    auto [it, fresh] = owner.emplace(asset.name, lock_path);
    if (!fresh) {
      fail(Errc::kAssetNameCollision, "'" + it->second + "' and '" + lock_path +
                                          "' both map to asset name '" + asset.name + "'");
    }
    asset.lock_path = std::move(lock_path);
    catalog.entries.push_back(std::move(asset));
  };
  for (const auto& out : payload_outs(lock)) {
    if (path_key(out.path) == kPayloadDir) {
      if (!out.hash.is_dir()) fail(Errc::kIntegrityError, "brick/ is recorded as a file");
      for (const auto& e : store.read_dir_manifest(out.hash).entries) {
        add(std::string(kPayloadDir) + "/" + e.relpath, e.hash);
      }
    } else {
      add(out.path, out.hash);
    }
  }
  return catalog;
}

std::vector<InstalledBrick> list_installed(const LibraryLayout& lib) {
  std::vector<InstalledBrick> out;
  std::error_code ec;
  if (!fs::is_directory(lib.root, ec)) return out;
  for (const auto& org : fs::directory_iterator(lib.root, ec)) {
    auto org_name = org.path().filename().string();
    if (!org.is_directory() || org_name == "cache" || !is_identifier(org_name) ||
        org_name.starts_with(".")) {
      continue;
    }
    for (const auto& brick : fs::directory_iterator(org.path(), ec)) {
      auto name = brick.path().filename().string();
      if (!brick.is_directory() || name.starts_with(".")) continue;
      for (const auto& version : fs::directory_iterator(brick.path(), ec)) {
        auto commit = version.path().filename().string();
        if (commit.starts_with(".") || !is_installed(version.path())) continue;
        InstalledBrick b;
        b.ref = BrickRef{org_name, name, commit, std::nullopt};
        b.path = version.path();
        b.installed_at = installed_at(version.path());
        out.push_back(std::move(b));
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const InstalledBrick& a, const InstalledBrick& b) {
    return a.path < b.path;
  });
  return out;
}

fs::path find_installed(const LibraryLayout& lib, const BrickRef& ref) {
  std::vector<InstalledBrick> candidates;
  for (auto& b : list_installed(lib)) {
    if (b.ref.org != ref.org || b.ref.name != ref.name) continue;
    if (!ref.is_latest() && !b.ref.commit.starts_with(ref.commit)) continue;
    candidates.push_back(std::move(b));
  }
  if (candidates.empty()) {
    fail(Errc::kNotInstalled,
         ref.str() + " is not installed; run `bricks install " + ref.str() + "` first");
  }
  if (!ref.is_latest() && candidates.size() > 1) {
    fail(Errc::kAmbiguousPrefix, ref.str() + " matches several installed commits");
  }
  auto newest = std::max_element(candidates.begin(), candidates.end(),
                                 [](const InstalledBrick& a, const InstalledBrick& b) {
                                   return std::tie(a.installed_at, a.ref.commit) <
                                          std::tie(b.installed_at, b.ref.commit);
                                 });
  return newest->path;
}

AssetCatalog assets(const LibraryLayout& lib, const BrickRef& ref) {
  auto dir = find_installed(lib, ref);
  ContentStore store(lib.cache());
  return build_catalog(read_lock(dir), dir, store);
}

std::vector<std::string> unreferenced_blobs(const LibraryLayout& lib) {
  ContentStore store(lib.cache());
  std::set<std::string> referenced;
  for (const auto& b : list_installed(lib)) {
    for (const auto& out : payload_outs(read_lock(b.path))) {
      referenced.insert(out.hash.digest());
      if (out.hash.is_dir() && store.contains(out.hash)) {
        for (const auto& e : store.read_dir_manifest(out.hash).entries) {
          referenced.insert(e.hash.digest());
        }
      }
    }
  }
  std::vector<std::string> out;
  for (auto& d : store.digests()) {
    if (!referenced.contains(d)) out.push_back(std::move(d));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dependency sets

fs::path dependencies_path(const fs::path& workdir) {
  return workdir / ".bb" / "dependencies.txt";
}

void deps_init(const fs::path& workdir) {
  std::error_code ec;
  auto bb = workdir / ".bb";
  if (fs::exists(bb, ec) && !fs::is_directory(bb, ec)) {
    fail(Errc::kIoError, bb.string() + " exists and is not a directory");
  }
  fs::create_directories(bb, ec);
  if (ec) fail(Errc::kIoError, "cannot create " + bb.string() + ": " + ec.message());
  auto path = dependencies_path(workdir);
  if (fs::exists(path, ec)) return;
  fsutil::write_file_atomic(path, kDependenciesHeader);
}

AddResult deps_add(const fs::path& workdir, RegistryClient& client, const BrickRef& ref) {
  auto path = dependencies_path(workdir);
  std::error_code ec;
  if (!fs::exists(path, ec)) fail(Errc::kIoError, path.string() + " does not exist; run `bricks init`");
  AddResult result;
  result.deps = parse_dependencies(fsutil::read_file(path));
  result.entry.ref = ref;
  result.entry.ref.commit = client.resolve_commit(ref);
  result.entry.ref.source_url.reset();
  result.entry.url = ref.source_url ? *ref.source_url : client.endpoint().base_url + "/" + ref.id();
  result.updated = result.deps.upsert(result.entry);
  fsutil::write_file_atomic(path, serialize_dependencies(result.deps));
  return result;
}

bool PullReport::ok() const {
  return std::none_of(entries.begin(), entries.end(), [](const PullEntry& e) {
    return e.status == PullEntry::Status::kFailed;
  });
}

std::vector<fs::path> PullReport::paths() const {
  std::vector<fs::path> out;
  for (const auto& e : entries) {
    if (e.status != PullEntry::Status::kFailed) out.push_back(e.path);
  }
  return out;
}

std::size_t PullReport::installed() const {
  return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [](const PullEntry& e) {
    return e.status == PullEntry::Status::kInstalled;
  }));
}

PullReport deps_pull(const fs::path& workdir, const LibraryLayout& lib, RegistryClient& client,
                     const InstallHooks& hooks) {
  auto deps = parse_dependencies(fsutil::read_file(dependencies_path(workdir)));
  PullReport report;
  for (const auto& entry : deps.entries) {
    PullEntry pe;
    pe.ref = entry.ref;
    pe.path = lib.brick_dir(entry.ref.org, entry.ref.name, entry.ref.commit);
    if (is_installed(pe.path)) {
      pe.status = PullEntry::Status::kPresent;
    } else {
      try {
        auto r = install(lib, client, entry.ref, hooks);
        pe.status = r.already_installed ? PullEntry::Status::kPresent : PullEntry::Status::kInstalled;
      } catch (const Error& e) {
        pe.status = PullEntry::Status::kFailed;
        pe.error = e;
      }
    }
    report.entries.push_back(std::move(pe));
  }
  return report;
}

}  // namespace bricks
