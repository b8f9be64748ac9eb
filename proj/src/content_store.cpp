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

#include "bricks/content_store.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <fstream>
#include <set>

#include "bricks/error.hpp"
#include "bricks/fsutil.hpp"

namespace bricks {

namespace {

constexpr std::string_view kCopiesFile = ".copies";
constexpr std::string_view kTmpPrefix = ".tmp-";

void copy_stream(const fs::path& src, ContentStore::Writer& w) {
  std::ifstream in(src, std::ios::binary);
  if (!in) fail(Errc::kIoError, "cannot open " + src.string());
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    auto n = in.gcount();
    if (n <= 0) break;
    w.write(std::string_view(buf.data(), static_cast<std::size_t>(n)));
  }
  if (in.bad()) fail(Errc::kIoError, "read failed: " + src.string());
}

bool symlink_refused(const std::error_code& ec) {
  return ec == std::errc::operation_not_permitted || ec == std::errc::not_supported ||
         ec == std::errc::function_not_supported || ec == std::errc::permission_denied;
}

void remove_existing(const fs::path& dest) {
  std::error_code ec;
  auto st = fs::symlink_status(dest, ec);
  if (ec || !fs::exists(st)) return;
  if (fs::is_directory(st)) {
    fs::permissions(dest, fs::perms::owner_write, fs::perm_options::add, ec);
    fs::remove_all(dest, ec);
  } else {
    fs::remove(dest, ec);
  }
  if (ec) fail(Errc::kIoError, "cannot replace " + dest.string());
}

}  // namespace

// ---------------------------------------------------------------------------
// DirManifest

std::uint64_t DirManifest::total_size() const {
  std::uint64_t total = 0;
  for (const auto& e : entries) total += e.size;
  return total;
}

std::string serialize_dir_manifest(const DirManifest& manifest) {
  std::string out;
  for (const auto& e : manifest.entries) {
    out += e.hash.digest();
    out += ' ';
    out += std::to_string(e.size);
    out += ' ';
    out += e.relpath;
    out += '\n';
  }
  return out;
}

DirManifest parse_dir_manifest(std::string_view text) {
  DirManifest manifest;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) fail(Errc::kSyntaxError, "dir manifest: missing final newline");
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    auto sp1 = line.find(' ');
    auto sp2 = sp1 == std::string_view::npos ? sp1 : line.find(' ', sp1 + 1);
    if (sp2 == std::string_view::npos) fail(Errc::kSyntaxError, "dir manifest: malformed line");
    DirEntry e;
    e.hash = ContentHash::parse(line.substr(0, sp1));
    auto size = line.substr(sp1 + 1, sp2 - sp1 - 1);
    auto [ptr, ec] = std::from_chars(size.data(), size.data() + size.size(), e.size);
    if (ec != std::errc() || ptr != size.data() + size.size()) {
      fail(Errc::kSyntaxError, "dir manifest: bad size");
    }
    e.relpath = std::string(line.substr(sp2 + 1));
    if (!fsutil::is_safe_relative(e.relpath)) {
      fail(Errc::kSyntaxError, "dir manifest: unsafe path '" + e.relpath + "'");
    }
    if (!manifest.entries.empty() && manifest.entries.back().relpath >= e.relpath) {
      fail(Errc::kSyntaxError, "dir manifest: entries not sorted/unique");
    }
    manifest.entries.push_back(std::move(e));
  }
  return manifest;
}

TreeHash hash_tree(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) fail(Errc::kIoError, "not a directory: " + dir.string());
  TreeHash tree;
  for (auto it = fs::recursive_directory_iterator(dir, ec); !ec && it != fs::end(it);
       it.increment(ec)) {
    if (!it->is_regular_file()) continue;
    auto rel = it->path().lexically_relative(dir).generic_string();
    if (rel.find('\n') != std::string::npos) fail(Errc::kIoError, "newline in file name under " + dir.string());
    auto [hash, size] = hash_file(it->path());
    tree.manifest.entries.push_back({std::move(rel), std::move(hash), size});
  }
  if (ec) fail(Errc::kIoError, "cannot walk " + dir.string() + ": " + ec.message());
  std::sort(tree.manifest.entries.begin(), tree.manifest.entries.end(),
            [](const DirEntry& a, const DirEntry& b) { return a.relpath < b.relpath; });
  tree.hash = ContentHash(hash_bytes(serialize_dir_manifest(tree.manifest)).digest(), true);
  return tree;
}

std::pair<ContentHash, std::uint64_t> hash_path(const fs::path& path) {
  std::error_code ec;
  if (fs::is_directory(path, ec)) {
    auto tree = hash_tree(path);
    return {tree.hash, tree.manifest.total_size()};
  }
  return hash_file(path);
}

// ---------------------------------------------------------------------------
// Writer

ContentStore::Writer::Writer(ContentStore& store) : store_(&store) {
  tmp_ = store.root_ / (std::string(kTmpPrefix) + fsutil::random_token());
  fd_ = ::open(tmp_.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_CLOEXEC, 0644);
  if (fd_ < 0) {
    fail(Errc::kIoError, "cannot create temp blob in " + store.root_.string() + ": " +
                             std::strerror(errno));
  }
}

ContentStore::Writer::Writer(Writer&& other) noexcept
    : store_(other.store_),
      tmp_(std::move(other.tmp_)),
      fd_(std::exchange(other.fd_, -1)),
      md5_(std::move(other.md5_)),
      size_(other.size_) {}

ContentStore::Writer::~Writer() { abort(); }

void ContentStore::Writer::abort() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
    std::error_code ec;
    fs::remove(tmp_, ec);
  }
}

void ContentStore::Writer::write(std::string_view bytes) {
  if (fd_ < 0) fail(Errc::kIoError, "blob writer already closed");
  md5_.update(bytes);
  size_ += bytes.size();
  while (!bytes.empty()) {
    auto n = ::write(fd_, bytes.data(), bytes.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      fail(Errc::kIoError, std::string("blob write failed: ") + std::strerror(errno));
    }
    bytes.remove_prefix(static_cast<std::size_t>(n));
  }
}

ContentHash ContentStore::Writer::commit(const std::optional<ContentHash>& expected) {
  if (fd_ < 0) fail(Errc::kIoError, "blob writer already closed");
  ContentHash hash(md5_.finish(), false);
  if (expected && expected->digest() != hash.digest()) {
    abort();
    fail(Errc::kIntegrityError,
         "content digest " + hash.digest() + " does not match expected " + expected->digest());
  }
  auto dest = store_->blob_path(hash);
  std::error_code ec;
  if (fs::exists(dest, ec)) {
    abort();
    if (hash_file(dest).first != hash) {
      fail(Errc::kCorruptCache, "cached blob " + dest.string() + " does not match its name");
    }
    return hash;
  }
  ::fchmod(fd_, 0444);
  ::fsync(fd_);
  ::close(fd_);
  fd_ = -1;
  fs::create_directories(dest.parent_path(), ec);
  fs::rename(tmp_, dest, ec);
  if (ec) {
    fs::remove(tmp_, ec);
    fail(Errc::kIoError, "cannot publish blob " + dest.string());
  }
  store_->writes_.fetch_add(1);
  return hash;
}

// ---------------------------------------------------------------------------
// ContentStore

ContentStore::ContentStore(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec || !fs::is_directory(root_)) fail(Errc::kIoError, "cannot create cache " + root_.string());
  root_ = fs::absolute(root_);
}

fs::path ContentStore::blob_path(const ContentHash& hash) const {
  const auto& d = hash.digest();
  return root_ / d.substr(0, 2) / d.substr(2);
}

bool ContentStore::contains(const ContentHash& hash) const {
  std::error_code ec;
  return fs::is_regular_file(blob_path(hash), ec);
}

ContentStore::Writer ContentStore::writer() { return Writer(*this); }

ContentHash ContentStore::put_bytes(std::string_view data) {
  auto w = writer();
  w.write(data);
  return w.commit();
}

ContentHash ContentStore::put_file(const fs::path& path) {
  auto w = writer();
  copy_stream(path, w);
  return w.commit();
}

TreeHash ContentStore::put_tree(const fs::path& dir) {
  auto tree = hash_tree(dir);
  for (const auto& e : tree.manifest.entries) {
    if (!contains(e.hash)) {
      auto w = writer();
      copy_stream(dir / e.relpath, w);
      w.commit(e.hash);
    }
  }
  auto bytes = serialize_dir_manifest(tree.manifest);
  if (!contains(tree.hash)) {
    auto w = writer();
    w.write(bytes);
    w.commit(tree.hash);
  }
  return tree;
}

ContentHash ContentStore::put_path(const fs::path& path) {
  std::error_code ec;
  if (fs::is_directory(path, ec)) return put_tree(path).hash;
  return put_file(path);
}

std::string ContentStore::read_blob(const ContentHash& hash) const {
  if (!contains(hash)) fail(Errc::kMissingBlob, "blob " + hash.str() + " not in cache");
  return fsutil::read_file(blob_path(hash));
}

DirManifest ContentStore::read_dir_manifest(const ContentHash& hash) const {
  return parse_dir_manifest(read_blob(hash));
}

std::vector<ContentHash> ContentStore::closure(const ContentHash& hash) const {
  std::vector<ContentHash> out{hash};
  if (hash.is_dir()) {
    for (auto& e : read_dir_manifest(hash).entries) out.push_back(e.hash);
  }
  return out;
}

void ContentStore::record_copy(const ContentHash& hash, const fs::path& dest) {
  auto line = hash.digest() + "\t" + fs::absolute(dest).string() + "\n";
  auto path = root_ / kCopiesFile;
  int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) fail(Errc::kIoError, "cannot record copy in " + path.string());
  auto n = ::write(fd, line.data(), line.size());
  ::close(fd);
  if (n != static_cast<ssize_t>(line.size())) fail(Errc::kIoError, "cannot record copy");
}

void ContentStore::link_file(const ContentHash& hash, const fs::path& dest, LinkMode mode) {
  auto target = blob_path(hash);
  std::error_code ec;
  if (mode == LinkMode::kSymlink && fs::is_symlink(dest, ec) &&
      fs::read_symlink(dest, ec) == target) {
    return;
  }
  remove_existing(dest);
  fs::create_directories(dest.parent_path(), ec);
  if (mode == LinkMode::kSymlink) {
    fs::create_symlink(target, dest, ec);
    if (!ec) return;
    if (!symlink_refused(ec)) {
      fail(Errc::kIoError, "cannot link " + dest.string() + ": " + ec.message());
    }
  }
  fs::copy_file(target, dest, ec);
  if (ec) fail(Errc::kIoError, "cannot copy to " + dest.string() + ": " + ec.message());
  fs::permissions(dest, fs::perms::owner_read | fs::perms::group_read | fs::perms::others_read,
                  ec);
  record_copy(hash, dest);
}

void ContentStore::materialize(const ContentHash& hash, const fs::path& dest, LinkMode mode) {
  if (!hash.is_dir()) {
    if (!contains(hash)) fail(Errc::kMissingBlob, "blob " + hash.str() + " not in cache");
    link_file(hash, dest, mode);
    return;
  }
  auto manifest = read_dir_manifest(hash);
  for (const auto& e : manifest.entries) {
    if (!contains(e.hash)) {
      fail(Errc::kMissingBlob, "blob " + e.hash.str() + " (" + e.relpath + ") not in cache");
    }
  }
  std::error_code ec;
  if (!fs::is_directory(fs::symlink_status(dest, ec))) remove_existing(dest);
  fs::create_directories(dest, ec);
  if (ec) fail(Errc::kIoError, "cannot create " + dest.string());

  std::set<std::string> wanted;
  for (const auto& e : manifest.entries) {
    wanted.insert(e.relpath);
    link_file(e.hash, dest / e.relpath, mode);
  }
  // Drop anything the manifest does not list, so dest mirrors it exactly.
  std::vector<fs::path> extra;
  for (auto it = fs::recursive_directory_iterator(dest, ec); !ec && it != fs::end(it);
       it.increment(ec)) {
    if (it->is_directory(ec) && !it->is_symlink(ec)) continue;
    if (!wanted.contains(it->path().lexically_relative(dest).generic_string())) {
      extra.push_back(it->path());
    }
  }
  for (const auto& p : extra) remove_existing(p);
}

VerifyReport ContentStore::verify() const {
  VerifyReport report;
  std::error_code ec;
  for (const auto& shard : fs::directory_iterator(root_, ec)) {
    auto name = shard.path().filename().string();
    if (name.starts_with(".")) continue;  // temp files, copy notes
    if (!shard.is_directory() || name.size() != 2 || !is_hex(name)) {
      report.stray.push_back(shard.path());
      continue;
    }
    for (const auto& blob : fs::directory_iterator(shard.path(), ec)) {
      auto rest = blob.path().filename().string();
      if (rest.size() != 30 || !is_hex(rest) || !blob.is_regular_file()) {
        report.stray.push_back(blob.path());
        continue;
      }
      ++report.checked;
      if (hash_file(blob.path()).first.digest() != name + rest) {
        report.corrupt.push_back(blob.path());
      }
    }
  }
  auto copies = root_ / kCopiesFile;
  if (fs::exists(copies, ec)) {
    auto text = fsutil::read_file(copies);
    std::size_t pos = 0;
    while (pos < text.size()) {
      auto end = text.find('\n', pos);
      if (end == std::string::npos) break;  // torn final append
      auto line = std::string_view(text).substr(pos, end - pos);
      pos = end + 1;
      auto tab = line.find('\t');
      if (tab == std::string_view::npos) continue;
      fs::path dest(std::string(line.substr(tab + 1)));
      if (fs::is_symlink(dest, ec) || !fs::is_regular_file(dest, ec)) continue;
      ++report.checked;
      if (hash_file(dest).first.digest() != line.substr(0, tab)) report.corrupt.push_back(dest);
    }
  }
  return report;
}

std::vector<std::string> ContentStore::digests() const {
  std::vector<std::string> out;
  std::error_code ec;
  for (const auto& shard : fs::directory_iterator(root_, ec)) {
    auto name = shard.path().filename().string();
    if (name.size() != 2 || !is_hex(name) || !shard.is_directory()) continue;
    for (const auto& blob : fs::directory_iterator(shard.path(), ec)) {
      auto rest = blob.path().filename().string();
      if (rest.size() == 30 && is_hex(rest)) out.push_back(name + rest);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace bricks
