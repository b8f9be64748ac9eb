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

// Incremental execution of a brick manifest.
//
// A stage is stale when it has no lock entry, has no deps at all (it runs on
// every build), its command text changed, or any dep/out hash differs from
// what the lock recorded. Stages downstream of a stale stage are blocked
// until their upstreams have run; they are then re-evaluated against the
// fresh hashes and skipped if nothing they consume actually changed.
//
// An out that was edited in place (present, but with a new hash) makes its
// stage stale in plan(). repro() keeps such an edit and records it instead
// of regenerating it, so the consumers of that out re-run. Missing outs are
// always regenerated.

#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bricks/content_store.hpp"
#include "bricks/model.hpp"

namespace bricks {

namespace fs = std::filesystem;

enum class StageState { kFresh, kStale, kBlocked };
std::string_view state_name(StageState state);

enum class ReasonKind { kNoLockEntry, kAlwaysRun, kCmdChanged, kDepChanged, kOutChanged };

struct StaleReason {
  ReasonKind kind = ReasonKind::kNoLockEntry;
  std::string path;                     // empty for stage-level reasons
  std::optional<ContentHash> recorded;  // absent: not in the lock
  std::optional<ContentHash> current;   // absent: missing on disk

  std::string describe() const;
  friend bool operator==(const StaleReason&, const StaleReason&) = default;
};

struct StageStatus {
  std::string stage;
  StageState state = StageState::kFresh;
  std::vector<StaleReason> reasons;
};

/// Own-drift reasons for one stage against the current workspace.
/// `hash` returns the digest of a workspace path, or nullopt if missing.
using PathHasher = std::function<std::optional<ContentHash>(const std::string& path)>;
std::vector<StaleReason> stale_reasons(const Stage& stage, const LockStage* recorded,
                                       const PathHasher& hash);

/// Status of every stage, in manifest order.
std::vector<StageStatus> plan(const fs::path& workdir, const Manifest& manifest,
                              const std::optional<Lockfile>& lock);

struct StageRun {
  std::string stage;
  int exit_code = 0;
  std::chrono::milliseconds wall{0};
};

struct RunReport {
  std::vector<std::string> executed;  // in execution order, failures included
  std::vector<std::string> skipped;
  std::vector<std::string> failed;
  std::vector<StageRun> runs;
  Lockfile lock;
  std::string failure;  // diagnostics for the first failure

  bool ok() const { return failed.empty(); }
};

struct ReproOptions {
  int jobs = 1;
  bool write_lock = true;  // write <workdir>/brick.lock at the end
  /// Receives stage output as it is produced (it always goes to logs/).
  std::function<void(std::string_view)> echo;
  std::function<void(const std::string&)> log;
};

/// Runs stale stages in dependency order and records the new lockfile. A
/// failed stage stops its downstream stages; other stages still run and
/// every pre-existing lock entry is kept.
RunReport repro(const fs::path& workdir, const Manifest& manifest,
                const std::optional<Lockfile>& lock, const ReproOptions& options = {});

/// Stores every payload out (and directory members) in `store`. Throws
/// kHashMismatch if a file no longer matches the lock.
std::vector<ContentHash> commit_outputs(const fs::path& workdir, const Lockfile& lock,
                                        ContentStore& store);

/// Deterministic snapshot of the brick repository: everything except stage
/// outs, `brick/`, `logs/` and `.git/`.
std::string pack_snapshot(const fs::path& workdir, const Manifest& manifest);

inline constexpr std::string_view kManifestFile = "brick.yaml";
inline constexpr std::string_view kLockFile = "brick.lock";

Manifest load_manifest(const fs::path& workdir);
std::optional<Lockfile> load_lockfile(const fs::path& workdir);

}  // namespace bricks
