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

// Registry wire protocol (HTTP/1.1, `Authorization: Bearer <token>` on every
// request):
//
//   GET  /api/ping                                  token check
//   GET  /api/{org}/{name}/commits                  JSON list, newest first
//   POST /api/{org}/{name}/commits                  body: snapshot ustar
//   GET  /api/{org}/{name}/{commit}/snapshot.tar    snapshot ustar
//   GET  /api/{org}/{name}/{commit}/lock            brick.lock of that commit
//   GET  /blobs/{md5}                               blob bytes (HEAD: presence)
//   PUT  /blobs/{md5}                               blob upload
//
// Snapshot, lock and blob responses carry `X-Content-MD5` with the MD5 of
// the body. Status mapping: 401 auth, 404 not found, 409 conflict,
// 422 missing blobs, 5xx retryable.

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bricks/content_store.hpp"
#include "bricks/model.hpp"

namespace bricks {

inline constexpr std::string_view kContentMd5Header = "X-Content-MD5";
inline constexpr std::string_view kCommitIdHeader = "X-Commit-Id";
inline constexpr std::string_view kBranchHeader = "X-Branch";
inline constexpr std::string_view kMainBranch = "main";

struct RegistryEndpoint {
  std::string base_url;  // no trailing slash
  std::string token;

  static RegistryEndpoint make(std::string base_url, std::string token);
};

struct CommitInfo {
  std::string commit;
  std::string branch;
  std::int64_t timestamp = 0;
  bool is_head_of_main = false;

  friend bool operator==(const CommitInfo&, const CommitInfo&) = default;
};

std::string commits_to_json(const std::vector<CommitInfo>& commits);
std::vector<CommitInfo> commits_from_json(std::string_view text);

/// Picks the commit a ref denotes: head of main for "latest", otherwise the
/// unique commit starting with the prefix.
std::string select_commit(const std::vector<CommitInfo>& commits, const BrickRef& ref);

struct ClientOptions {
  int parallel_fetches = 4;
  int retries = 3;  // extra attempts after the first, on network errors and 5xx
  std::chrono::milliseconds backoff{500};  // doubled after each retry
  std::chrono::seconds timeout{60};
};

/// Client-side request counters.
struct ClientStats {
  std::atomic<std::uint64_t> requests{0};
  std::atomic<std::uint64_t> blob_fetches{0};
  std::atomic<std::uint64_t> blob_bytes{0};
  std::atomic<std::uint64_t> snapshot_fetches{0};
  std::atomic<std::uint64_t> snapshot_bytes{0};
  std::atomic<std::uint64_t> blob_uploads{0};
};

struct PushOptions {
  std::optional<std::string> commit_id;  // server assigns SHA-1 of the archive if unset
  std::string branch{kMainBranch};
};

struct PushResult {
  std::string commit;
  bool created = false;
  std::size_t blobs_uploaded = 0;
};

/// Blobs a brick distributes: every payload out, plus members of
/// directory outs. Requires dir manifests to be in `store`.
std::vector<ContentHash> payload_blobs(const Lockfile& lock, const ContentStore& store);

class RegistryClient {
 public:
  explicit RegistryClient(RegistryEndpoint endpoint, ClientOptions options = {});

  const RegistryEndpoint& endpoint() const { return endpoint_; }
  const ClientOptions& options() const { return options_; }
  const ClientStats& stats() const { return stats_; }

  /// Throws kAuthError if the token is rejected.
  void ping();

  std::vector<CommitInfo> list_commits(std::string_view org, std::string_view name);
  /// Full 40-hex commit for `ref`. Throws kNotFound or kAmbiguousPrefix.
  std::string resolve_commit(const BrickRef& ref);

  /// Downloads and verifies the snapshot archive.
  std::string fetch_snapshot_archive(std::string_view org, std::string_view name,
                                     std::string_view commit);
  /// Downloads, verifies and unpacks the snapshot into `dest`. Returns the
  /// archive size in bytes.
  std::uint64_t fetch_snapshot(std::string_view org, std::string_view name,
                               std::string_view commit, const std::filesystem::path& dest);
  std::string fetch_lock(std::string_view org, std::string_view name, std::string_view commit);

  using Sink = std::function<void(std::string_view)>;
  /// Streams the blob into `sink` and checks its MD5 once complete. A
  /// mismatch throws kIntegrityError; the sink must then discard what it got.
  std::uint64_t fetch_blob(const ContentHash& hash, const Sink& sink);
  /// fetch_blob into the store through a temp file; retried as a whole.
  void fetch_blob_into(ContentStore& store, const ContentHash& hash);
  /// Fetches `hashes` with up to options().parallel_fetches streams.
  void fetch_blobs(ContentStore& store, std::span<const ContentHash> hashes);

  bool has_blob(const ContentHash& hash);
  void upload_blob(const ContentStore& store, const ContentHash& hash);

  /// Uploads the payload blobs the server lacks, then registers the
  /// snapshot as a new commit.
  PushResult push_brick(std::string_view org, std::string_view name, const std::string& archive,
                        const Lockfile& lock, const ContentStore& store,
                        const PushOptions& options = {});

 private:
  template <typename Fn>
  auto with_retry(Fn&& fn) -> decltype(fn());

  RegistryEndpoint endpoint_;
  ClientOptions options_;
  std::string scheme_host_;
  std::string path_prefix_;
  ClientStats stats_;
};

// ---------------------------------------------------------------------------

struct ServerStats {
  std::atomic<std::uint64_t> requests{0};
  std::atomic<std::uint64_t> unauthorized{0};
  std::atomic<std::uint64_t> commit_lists{0};
  std::atomic<std::uint64_t> snapshot_gets{0};
  std::atomic<std::uint64_t> snapshot_bytes{0};
  std::atomic<std::uint64_t> lock_gets{0};
  std::atomic<std::uint64_t> blob_gets{0};
  std::atomic<std::uint64_t> blob_bytes{0};
  std::atomic<std::uint64_t> blob_heads{0};
  std::atomic<std::uint64_t> blob_puts{0};
  std::atomic<std::uint64_t> pushes{0};

  void reset();
};

struct ServerOptions {
  std::filesystem::path storage;
  std::vector<std::string> tokens;
};

/// Self-hostable registry. Storage layout:
///   <storage>/blobs/...                      content store
///   <storage>/bricks/<org>/<name>/commits    one `<commit> <branch> <time>` line per push
///   <storage>/bricks/<org>/<name>/<commit>.tar
class RegistryServer {
 public:
  explicit RegistryServer(ServerOptions options);
  ~RegistryServer();

  RegistryServer(const RegistryServer&) = delete;
  RegistryServer& operator=(const RegistryServer&) = delete;

  /// Listens on a background thread; port 0 picks a free port. Returns the
  /// bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  /// Listens on the calling thread until stop().
  bool listen(const std::string& host, int port);
  void stop();
  std::string url() const;

  ServerStats& stats() { return stats_; }
  ContentStore& blobs() { return blobs_; }

  /// Registers a snapshot. Throws kConflictError if `commit_id` exists with
  /// other bytes, kMissingBlob if a payload blob was never uploaded.
  PushResult ingest(std::string_view org, std::string_view name, const std::string& archive,
                    const PushOptions& options);
  std::vector<CommitInfo> commits(std::string_view org, std::string_view name) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  ServerOptions options_;
  ContentStore blobs_;
  ServerStats stats_;
  std::string host_;
  int port_ = 0;
};

}  // namespace bricks
