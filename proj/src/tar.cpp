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

#include "bricks/tar.hpp"

#include <algorithm>
#include <array>
#include <cstring>

#include "bricks/error.hpp"
#include "bricks/fsutil.hpp"

namespace bricks::tar {

namespace {

constexpr std::size_t kBlock = 512;

struct Header {
  char name[100];
  char mode[8];
  char uid[8];
  char gid[8];
  char size[12];
  char mtime[12];
  char chksum[8];
  char typeflag;
  char linkname[100];
  char magic[6];
  char version[2];
  char uname[32];
  char gname[32];
  char devmajor[8];
  char devminor[8];
  char prefix[155];
  char pad[12];
};
static_assert(sizeof(Header) == kBlock);

void put_octal(char* field, std::size_t width, std::uint64_t value) {
  // width-1 digits, NUL terminated.
  std::string digits(width - 1, '0');
  for (std::size_t i = width - 1; i-- > 0;) {
    digits[i] = static_cast<char>('0' + (value & 7));
    value >>= 3;
  }
  if (value != 0) fail(Errc::kIoError, "value too large for tar header field");
  std::memcpy(field, digits.data(), width - 1);
  field[width - 1] = '\0';
}

std::uint64_t get_octal(const char* field, std::size_t width) {
  std::uint64_t value = 0;
  std::size_t i = 0;
  while (i < width && field[i] == ' ') ++i;
  for (; i < width && field[i] >= '0' && field[i] <= '7'; ++i) {
    value = (value << 3) | static_cast<std::uint64_t>(field[i] - '0');
  }
  return value;
}

unsigned checksum(const Header& h) {
  Header copy = h;
  std::memset(copy.chksum, ' ', sizeof(copy.chksum));
  const auto* bytes = reinterpret_cast<const unsigned char*>(&copy);
  unsigned sum = 0;
  for (std::size_t i = 0; i < kBlock; ++i) sum += bytes[i];
  return sum;
}

std::string field_string(const char* field, std::size_t width) {
  return std::string(field, strnlen(field, width));
}

void set_path(Header& h, const std::string& path) {
  if (path.size() <= sizeof(h.name)) {
    std::memcpy(h.name, path.data(), path.size());
    return;
  }
  // Split at a '/' so that prefix <= 155 and name <= 100.
  for (auto pos = path.rfind('/'); pos != std::string::npos && pos > 0;
       pos = path.rfind('/', pos - 1)) {
    if (pos <= sizeof(h.prefix) && path.size() - pos - 1 <= sizeof(h.name)) {
      std::memcpy(h.prefix, path.data(), pos);
      std::memcpy(h.name, path.data() + pos + 1, path.size() - pos - 1);
      return;
    }
  }
  fail(Errc::kIoError, "path too long for ustar: " + path);
}

[[noreturn]] void corrupt(const std::string& why) {
  fail(Errc::kIntegrityError, "corrupt archive: " + why);
}

}  // namespace

std::string write(std::vector<Entry> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.path < b.path; });
  std::string out;
  for (const auto& e : entries) {
    if (!fsutil::is_safe_relative(e.path)) fail(Errc::kIoError, "unsafe archive path " + e.path);
    Header h{};
    set_path(h, e.path);
    put_octal(h.mode, sizeof(h.mode), e.executable ? 0755 : 0644);
    put_octal(h.uid, sizeof(h.uid), 0);
    put_octal(h.gid, sizeof(h.gid), 0);
    put_octal(h.size, sizeof(h.size), e.data.size());
    put_octal(h.mtime, sizeof(h.mtime), 0);
    h.typeflag = '0';
    std::memcpy(h.magic, "ustar", 6);
    std::memcpy(h.version, "00", 2);
    put_octal(h.chksum, 7, checksum(h));
    h.chksum[7] = ' ';
    out.append(reinterpret_cast<const char*>(&h), kBlock);
    out += e.data;
    out.append((kBlock - e.data.size() % kBlock) % kBlock, '\0');
  }
  out.append(2 * kBlock, '\0');
  return out;
}

std::vector<Entry> read(std::string_view archive) {
  std::vector<Entry> entries;
  std::size_t pos = 0;
  static const std::array<char, kBlock> kZero{};
  while (true) {
    if (pos + kBlock > archive.size()) corrupt("truncated header");
    if (std::memcmp(archive.data() + pos, kZero.data(), kBlock) == 0) break;
    Header h;
    std::memcpy(&h, archive.data() + pos, kBlock);
    pos += kBlock;
    if (std::memcmp(h.magic, "ustar", 5) != 0) corrupt("bad magic");
    if (get_octal(h.chksum, sizeof(h.chksum)) != checksum(h)) corrupt("header checksum mismatch");
    auto size = get_octal(h.size, sizeof(h.size));
    if (size > archive.size() - pos) corrupt("truncated entry");
    auto prefix = field_string(h.prefix, sizeof(h.prefix));
    auto name = field_string(h.name, sizeof(h.name));
    auto path = prefix.empty() ? name : prefix + "/" + name;
    auto padded = size + (kBlock - size % kBlock) % kBlock;
    if (h.typeflag == '0' || h.typeflag == '\0') {
      if (!fsutil::is_safe_relative(path)) corrupt("unsafe path '" + path + "'");
      Entry e;
      e.path = std::move(path);
      e.data = std::string(archive.substr(pos, size));
      e.executable = (get_octal(h.mode, sizeof(h.mode)) & 0100) != 0;
      entries.push_back(std::move(e));
    } else if (h.typeflag != '5') {
      corrupt("unsupported entry type for '" + path + "'");
    }
    if (padded > archive.size() - pos) corrupt("truncated entry padding");
    pos += padded;
  }
  return entries;
}

std::string pack_directory(const std::filesystem::path& dir, const ExcludeFn& exclude) {
  namespace fs = std::filesystem;
  std::vector<Entry> entries;
  std::error_code ec;
  for (auto it = fs::recursive_directory_iterator(dir, ec); !ec && it != fs::end(it);
       it.increment(ec)) {
    auto rel = it->path().lexically_relative(dir).generic_string();
    if (it->is_directory() && !it->is_symlink()) {
      if (exclude && exclude(rel + "/")) it.disable_recursion_pending();
      continue;
    }
    if (!it->is_regular_file() || (exclude && exclude(rel))) continue;
    Entry e;
    e.path = rel;
    e.data = fsutil::read_file(it->path());
    auto perms = fs::status(it->path()).permissions();
    e.executable = (perms & fs::perms::owner_exec) != fs::perms::none;
    entries.push_back(std::move(e));
  }
  if (ec) fail(Errc::kIoError, "cannot walk " + dir.string());
  return write(std::move(entries));
}

void unpack(std::string_view archive, const std::filesystem::path& dest) {
  namespace fs = std::filesystem;
  for (const auto& e : read(archive)) {
    auto path = dest / e.path;
    fs::create_directories(path.parent_path());
    fsutil::write_file_atomic(path, e.data);
    if (e.executable) {
      fs::permissions(path, fs::perms::owner_exec | fs::perms::group_exec | fs::perms::others_exec,
                      fs::perm_options::add);
    }
  }
}

}  // namespace bricks::tar
