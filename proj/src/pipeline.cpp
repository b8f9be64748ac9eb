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

#include "bricks/pipeline.hpp"

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <map>
#include <mutex>
#include <thread>

#include "bricks/error.hpp"
#include "bricks/fsutil.hpp"
#include "bricks/tar.hpp"

extern char** environ;

namespace bricks {

namespace {

// Memoizes path hashes for one run so each path is hashed once, except
// when a stage rewrites it.
class HashMemo {
 public:
  explicit HashMemo(fs::path workdir) : workdir_(std::move(workdir)) {}

  std::optional<std::pair<ContentHash, std::uint64_t>> get(const std::string& path) {
    std::string key(path_key(path));
    {
      std::lock_guard lock(mu_);
      if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    }
    std::optional<std::pair<ContentHash, std::uint64_t>> value;
    std::error_code ec;
    auto full = workdir_ / key;
    if (fs::exists(full, ec)) value = hash_path(full);
    std::lock_guard lock(mu_);
    memo_[key] = value;
    return value;
  }

  void invalidate(const std::string& path) {
    std::lock_guard lock(mu_);
    for (auto it = memo_.begin(); it != memo_.end();) {
      it = paths_overlap(it->first, path) ? memo_.erase(it) : std::next(it);
    }
  }

 private:
  fs::path workdir_;
  std::mutex mu_;
  std::map<std::string, std::optional<std::pair<ContentHash, std::uint64_t>>> memo_;
};

// Lock entry for `stage` from the current workspace state.
LockStage record_stage(const Stage& stage, HashMemo& memo) {
  LockStage entry;
  entry.name = stage.name;
  entry.cmd = stage.cmd;
  for (const auto& d : stage.deps) {
    auto v = memo.get(d);
    if (!v) fail(Errc::kStageFailed, "dep '" + d + "' of stage '" + stage.name + "' is missing");
    entry.deps.push_back({d, v->first, v->second});
  }
  for (const auto& o : stage.outs) {
    auto v = memo.get(o);
    if (!v) fail(Errc::kStageFailed, "stage '" + stage.name + "' did not produce '" + o + "'");
    entry.outs.push_back({o, v->first, v->second});
  }
  return entry;
}

// True when the only drift is in outputs that still exist: they were edited
// in place, and the edit is kept rather than regenerated.
bool only_edited_outs(const std::vector<StaleReason>& reasons) {
  return !reasons.empty() && std::all_of(reasons.begin(), reasons.end(), [](const StaleReason& r) {
    return r.kind == ReasonKind::kOutChanged && r.current && r.recorded;
  });
}

PathHasher hasher_for(HashMemo& memo) {
  return [&memo](const std::string& path) -> std::optional<ContentHash> {
    auto v = memo.get(path);
    if (!v) return std::nullopt;
    return v->first;
  };
}

std::string tail(const std::string& text, std::size_t n) {
  return text.size() <= n ? text : "..." + text.substr(text.size() - n);
}

struct ExecResult {
  int exit_code = 0;
  std::string output;
};

// Runs `cmd` through /bin/sh in `workdir`; stdout and stderr are merged and
// teed into `log_path` and `echo`.
ExecResult run_shell(const std::string& cmd, const fs::path& workdir, const fs::path& log_path,
                     const std::function<void(std::string_view)>& echo) {
  fs::create_directories(log_path.parent_path());
  int log_fd = ::open(log_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (log_fd < 0) fail(Errc::kIoError, "cannot open " + log_path.string());

  std::vector<std::string> env_strings;
  for (char** e = environ; *e; ++e) {
    if (!std::string_view(*e).starts_with("BRICK_WORKDIR=")) env_strings.emplace_back(*e);
  }
  env_strings.push_back("BRICK_WORKDIR=" + workdir.string());
  std::vector<char*> envp;
  for (auto& s : env_strings) envp.push_back(s.data());
  envp.push_back(nullptr);
  std::string dir = workdir.string();
  const char* argv[] = {"/bin/sh", "-c", cmd.c_str(), nullptr};

  int pipe_fds[2];
  if (::pipe2(pipe_fds, O_CLOEXEC) != 0) {
    ::close(log_fd);
    fail(Errc::kIoError, "pipe failed");
  }
  pid_t pid = ::fork();
  if (pid < 0) {
    ::close(log_fd);
    ::close(pipe_fds[0]);
    ::close(pipe_fds[1]);
    fail(Errc::kIoError, "fork failed");
  }
  if (pid == 0) {
    // Only async-signal-safe calls until exec.
    ::dup2(pipe_fds[1], STDOUT_FILENO);
    ::dup2(pipe_fds[1], STDERR_FILENO);
    int devnull = ::open("/dev/null", O_RDONLY);
    if (devnull >= 0) ::dup2(devnull, STDIN_FILENO);
    if (::chdir(dir.c_str()) != 0) ::_exit(126);
    ::execve("/bin/sh", const_cast<char* const*>(argv), envp.data());
    ::_exit(127);
  }
  ::close(pipe_fds[1]);

  ExecResult result;
  char buf[8192];
  for (;;) {
    auto n = ::read(pipe_fds[0], buf, sizeof(buf));
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    std::string_view chunk(buf, static_cast<std::size_t>(n));
    [[maybe_unused]] auto w = ::write(log_fd, chunk.data(), chunk.size());
    result.output.append(chunk);
    if (result.output.size() > (1 << 20)) result.output.erase(0, result.output.size() - (1 << 19));
    if (echo) echo(chunk);
  }
  ::close(pipe_fds[0]);
  ::close(log_fd);
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    result.exit_code = 128 + WTERMSIG(status);
  } else {
    result.exit_code = 1;
  }
  return result;
}

void remove_path(const fs::path& p) {
  std::error_code ec;
  auto st = fs::symlink_status(p, ec);
  if (ec || !fs::exists(st)) return;
  if (fs::is_directory(st)) {
    // Materialized trees may contain read-only copies.
    for (auto& e : fs::recursive_directory_iterator(p, ec)) {
      if (e.is_directory() && !e.is_symlink()) {
        fs::permissions(e.path(), fs::perms::owner_all, fs::perm_options::add, ec);
      }
    }
  }
  fs::remove_all(p, ec);
  if (ec) fail(Errc::kIoError, "cannot remove " + p.string() + ": " + ec.message());
}

}  // namespace

std::string_view state_name(StageState state) {
  switch (state) {
    case StageState::kFresh: return "fresh";
    case StageState::kStale: return "stale";
    case StageState::kBlocked: return "blocked";
  }
  return "?";
}

std::string StaleReason::describe() const {
  switch (kind) {
    case ReasonKind::kNoLockEntry: return "no lock entry";
    case ReasonKind::kAlwaysRun: return "no deps (always runs)";
    case ReasonKind::kCmdChanged: return "command changed";
    case ReasonKind::kDepChanged:
      return "dep " + path + (current ? (recorded ? " changed" : " not recorded") : " missing");
    case ReasonKind::kOutChanged:
      return "out " + path + (current ? (recorded ? " changed" : " not recorded") : " missing");
  }
  return "?";
}

std::vector<StaleReason> stale_reasons(const Stage& stage, const LockStage* recorded,
                                       const PathHasher& hash) {
  std::vector<StaleReason> reasons;
  if (!recorded) {
    reasons.push_back({ReasonKind::kNoLockEntry, "", std::nullopt, std::nullopt});
    return reasons;
  }
  if (stage.deps.empty()) reasons.push_back({ReasonKind::kAlwaysRun, "", std::nullopt, std::nullopt});
  if (stage.cmd != recorded->cmd) {
    reasons.push_back({ReasonKind::kCmdChanged, "", std::nullopt, std::nullopt});
  }
  auto check = [&](ReasonKind kind, const std::string& path, const LockEntry* entry) {
    auto current = hash(path);
    std::optional<ContentHash> rec;
    if (entry) rec = entry->hash;
    if (!entry || !current || *current != entry->hash) {
      reasons.push_back({kind, path, rec, current});
    }
  };
  for (const auto& dep : stage.deps) check(ReasonKind::kDepChanged, dep, recorded->find_dep(dep));
  for (const auto& out : stage.outs) check(ReasonKind::kOutChanged, out, recorded->find_out(out));
  return reasons;
}

std::vector<StageStatus> plan(const fs::path& workdir, const Manifest& manifest,
                              const std::optional<Lockfile>& lock) {
  auto order = manifest.topological_order();
  auto up = manifest.upstream();
  HashMemo memo(workdir);
  auto hash = hasher_for(memo);
  std::vector<StageStatus> status(manifest.stages.size());
  for (auto i : order) {
    const auto& stage = manifest.stages[i];
    auto& st = status[i];
    st.stage = stage.name;
    st.reasons = stale_reasons(stage, lock ? lock->find(stage.name) : nullptr, hash);
    if (!st.reasons.empty()) {
      st.state = StageState::kStale;
    } else if (std::any_of(up[i].begin(), up[i].end(),
                           [&](std::size_t u) { return status[u].state != StageState::kFresh; })) {
      st.state = StageState::kBlocked;
    } else {
      st.state = StageState::kFresh;
    }
  }
  return status;
}

RunReport repro(const fs::path& workdir, const Manifest& manifest,
                const std::optional<Lockfile>& lock, const ReproOptions& options) {
  validate_manifest(manifest);
  const auto order = manifest.topological_order();
  const auto up = manifest.upstream();
  const std::size_t n = manifest.stages.size();
  auto log = [&](const std::string& line) {
    if (options.log) options.log(line);
  };

  Lockfile current = lock.value_or(Lockfile{});
  HashMemo memo(workdir);
  auto hash = hasher_for(memo);

  enum class Phase { kWaiting, kRunning, kExecuted, kSkipped, kFailed, kAborted };
  std::vector<Phase> phase(n, Phase::kWaiting);
  RunReport report;

  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::size_t> finished;
  std::vector<std::thread> workers;
  int running = 0;
  const int jobs = std::max(1, options.jobs);

  struct Outcome {
    ExecResult exec;
    std::chrono::milliseconds wall{0};
    std::optional<LockStage> entry;
    std::string error;
  };
  std::vector<Outcome> outcomes(n);

  auto execute = [&](std::size_t i) {
    const auto& stage = manifest.stages[i];
    auto& out = outcomes[i];
    auto start = std::chrono::steady_clock::now();
    try {
      out.exec = run_shell(stage.cmd, workdir, workdir / "logs" / (stage.name + ".log"),
                           options.echo);
      out.wall = std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - start);
      if (out.exec.exit_code != 0) {
        out.error = "stage '" + stage.name + "' exited with status " +
                    std::to_string(out.exec.exit_code) + "\n" + tail(out.exec.output, 2048);
      } else {
        for (const auto& o : stage.outs) memo.invalidate(o);
        out.entry = record_stage(stage, memo);
      }
    } catch (const std::exception& e) {
      if (out.exec.exit_code == 0) out.exec.exit_code = 1;
      out.error = e.what();
    }
    std::lock_guard lock(mu);
    finished.push_back(i);
    cv.notify_all();
  };

  auto launch = [&](std::size_t i) {
    const auto& stage = manifest.stages[i];
    for (const auto& o : stage.outs) {
      remove_path(workdir / std::string(path_key(o)));
      memo.invalidate(o);
      auto parent = (workdir / std::string(path_key(o))).parent_path();
      fs::create_directories(parent);
    }
    log("running stage " + stage.name);
    phase[i] = Phase::kRunning;
    ++running;
    if (jobs == 1) {
      execute(i);
    } else {
      workers.emplace_back(execute, i);
    }
  };

  auto settle = [&](std::size_t i) {
    auto& out = outcomes[i];
    report.runs.push_back({manifest.stages[i].name, out.exec.exit_code, out.wall});
    report.executed.push_back(manifest.stages[i].name);
    if (out.entry) {
      phase[i] = Phase::kExecuted;
      current.upsert(std::move(*out.entry));
    } else {
      phase[i] = Phase::kFailed;
      report.failed.push_back(manifest.stages[i].name);
      if (report.failure.empty()) report.failure = out.error;
      log("stage " + manifest.stages[i].name + " failed");
    }
  };

  for (;;) {
    bool progressed = false;
    for (auto i : order) {
      if (phase[i] != Phase::kWaiting || running >= jobs) continue;
      bool ready = true, aborted = false;
      for (auto u : up[i]) {
        if (phase[u] == Phase::kFailed || phase[u] == Phase::kAborted) aborted = true;
        if (phase[u] == Phase::kWaiting || phase[u] == Phase::kRunning) ready = false;
      }
      if (aborted) {
        phase[i] = Phase::kAborted;
        report.skipped.push_back(manifest.stages[i].name);
        progressed = true;
        continue;
      }
      if (!ready) continue;
      auto reasons = stale_reasons(manifest.stages[i], current.find(manifest.stages[i].name), hash);
      if (only_edited_outs(reasons)) {
        current.upsert(record_stage(manifest.stages[i], memo));
        phase[i] = Phase::kSkipped;
        report.skipped.push_back(manifest.stages[i].name);
        log("stage " + manifest.stages[i].name + ": keeping edited outputs");
        progressed = true;
        continue;
      }
      if (reasons.empty()) {
        phase[i] = Phase::kSkipped;
        report.skipped.push_back(manifest.stages[i].name);
        log("stage " + manifest.stages[i].name + " is up to date");
        progressed = true;
        continue;
      }
      launch(i);
      progressed = true;
      if (jobs == 1) {
        std::lock_guard lock(mu);
        finished.clear();
        --running;
        settle(i);
      }
    }
    if (running > 0) {
      std::unique_lock lock(mu);
      cv.wait(lock, [&] { return !finished.empty(); });
      while (!finished.empty()) {
        auto i = finished.front();
        finished.pop_front();
        --running;
        settle(i);
      }
      continue;
    }
    if (!progressed) break;
  }
  for (auto& t : workers) t.join();

  // Lock entries follow manifest order; entries of removed stages are dropped.
  Lockfile next;
  for (const auto& stage : manifest.stages) {
    if (const auto* entry = current.find(stage.name)) next.stages.push_back(*entry);
  }
  report.lock = std::move(next);
  if (options.write_lock) {
    fsutil::write_file_atomic(workdir / kLockFile, serialize_lockfile(report.lock));
  }
  return report;
}

std::vector<ContentHash> commit_outputs(const fs::path& workdir, const Lockfile& lock,
                                        ContentStore& store) {
  std::vector<ContentHash> out;
  for (const auto& entry : payload_outs(lock)) {
    auto path = workdir / std::string(path_key(entry.path));
    std::error_code ec;
    if (!fs::exists(path, ec)) fail(Errc::kHashMismatch, "'" + entry.path + "' is missing");
    if (entry.hash.is_dir()) {
      auto tree = hash_tree(path);
      if (tree.hash != entry.hash) {
        fail(Errc::kHashMismatch, "'" + entry.path + "' changed since the lock was written");
      }
      store.put_tree(path);
    } else {
      if (hash_file(path).first != entry.hash) {
        fail(Errc::kHashMismatch, "'" + entry.path + "' changed since the lock was written");
      }
      store.put_file(path);
    }
    out.push_back(entry.hash);
  }
  return out;
}

std::string pack_snapshot(const fs::path& workdir, const Manifest& manifest) {
  std::vector<std::string> outs;
  for (const auto& stage : manifest.stages) {
    for (const auto& o : stage.outs) outs.emplace_back(path_key(o));
  }
  return tar::pack_directory(workdir, [&](std::string_view rel) {
    auto key = path_key(rel);
    if (key == ".git" || key == "logs" || is_payload_path(key)) return true;
    return std::any_of(outs.begin(), outs.end(), [&](const std::string& o) {
      return key == o || (key.size() > o.size() && key.starts_with(o) && key[o.size()] == '/');
    });
  });
}

Manifest load_manifest(const fs::path& workdir) {
  auto path = workdir / kManifestFile;
  std::error_code ec;
  if (!fs::exists(path, ec)) fail(Errc::kSyntaxError, "no " + std::string(kManifestFile) + " in " + workdir.string());
  return parse_manifest(fsutil::read_file(path));
}

std::optional<Lockfile> load_lockfile(const fs::path& workdir) {
  auto path = workdir / kLockFile;
  std::error_code ec;
  if (!fs::exists(path, ec)) return std::nullopt;
  return parse_lockfile(fsutil::read_file(path));
}

}  // namespace bricks
