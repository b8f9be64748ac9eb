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

// Content-addressed blob cache.
//
// Layout: `<root>/<d[0..2]>/<d[2..32]>` for every stored digest d. Blobs are
// written to `<root>/.tmp-*`, fsynced, made read-only and renamed into place,
// so a reader never observes a partial blob and concurrent writers of the
// same bytes race harmlessly. Directory contents are represented by a
// DirManifest blob whose digest stands for the whole tree.

#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bricks/hash.hpp"

namespace bricks {

namespace fs = std::filesystem;

struct DirEntry {
  std::string relpath;  // '/'-separated
  ContentHash hash;
  std::uint64_t size = 0;

  friend bool operator==(const DirEntry&, const DirEntry&) = default;
};

/// Sorted (bytewise by relpath) listing of a directory's regular files.
struct DirManifest {
  std::vector<DirEntry> entries;

  std::uint64_t total_size() const;
  friend bool operator==(const DirManifest&, const DirManifest&) = default;
};

/// One `<md5> <size> <relpath>\n` line per entry.
std::string serialize_dir_manifest(const DirManifest& manifest);
DirManifest parse_dir_manifest(std::string_view text);

struct TreeHash {
  DirManifest manifest;
  ContentHash hash;  // is_dir() == true
};

/// Hashes every regular file under `dir` (symlinks to files are followed).
TreeHash hash_tree(const fs::path& dir);

/// Digest and size of a workspace path; directories hash as trees.
std::pair<ContentHash, std::uint64_t> hash_path(const fs::path& path);

enum class LinkMode { kSymlink, kCopy };

struct VerifyReport {
  std::size_t checked = 0;
  std::vector<fs::path> corrupt;
  std::vector<fs::path> stray;  // files that are not named like a digest

  bool ok() const { return corrupt.empty() && stray.empty(); }
};

class ContentStore {
 public:
  /// Creates `root` if needed.
  explicit ContentStore(fs::path root);

  ContentStore(const ContentStore&) = delete;
  ContentStore& operator=(const ContentStore&) = delete;

  const fs::path& root() const { return root_; }
  fs::path blob_path(const ContentHash& hash) const;
  bool contains(const ContentHash& hash) const;

  /// Streams one blob into a temp file under the root. Destroying an
  /// uncommitted writer discards the temp file.
  class Writer {
   public:
    Writer(Writer&&) noexcept;
    Writer& operator=(Writer&&) = delete;
    ~Writer();

    void write(std::string_view bytes);
    std::uint64_t size() const { return size_; }

    /// Publishes the blob. With `expected`, a digest mismatch throws
    /// Errc::kIntegrityError and nothing is stored. An existing blob with
    /// a bad re-hash throws Errc::kCorruptCache.
    ContentHash commit(const std::optional<ContentHash>& expected = std::nullopt);
    void abort();

   private:
    friend class ContentStore;
    explicit Writer(ContentStore& store);

    ContentStore* store_;
    fs::path tmp_;
    int fd_ = -1;
    Md5 md5_;
    std::uint64_t size_ = 0;
  };

  Writer writer();

  ContentHash put_bytes(std::string_view data);
  ContentHash put_file(const fs::path& path);
  /// Stores every file under `dir` and the directory manifest itself.
  TreeHash put_tree(const fs::path& dir);
  /// put_file or put_tree depending on what `path` is.
  ContentHash put_path(const fs::path& path);

  std::string read_blob(const ContentHash& hash) const;
  DirManifest read_dir_manifest(const ContentHash& hash) const;

  /// Blobs that `hash` needs to be materializable: itself, plus members for
  /// directory digests. Throws Errc::kMissingBlob if a dir manifest is absent.
  std::vector<ContentHash> closure(const ContentHash& hash) const;

  /// Makes `dest` resolve to the cached content. Files become symlinks into
  /// the cache; directories become a directory of such links. Falls back to
  /// copying (recorded in `<root>/.copies`) when symlinks are refused.
  void materialize(const ContentHash& hash, const fs::path& dest,
                   LinkMode mode = LinkMode::kSymlink);

  /// Re-hashes every cached blob and every recorded copy.
  VerifyReport verify() const;

  /// Digests currently stored (as plain file digests).
  std::vector<std::string> digests() const;

  /// Blob files committed by this instance.
  std::uint64_t write_count() const { return writes_.load(); }

 private:
  void link_file(const ContentHash& hash, const fs::path& dest, LinkMode mode);
  void record_copy(const ContentHash& hash, const fs::path& dest);

  fs::path root_;
  std::atomic<std::uint64_t> writes_{0};
};

}  // namespace bricks
