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

#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace bricks::tar {

struct Entry {
  std::string path;  // '/'-separated, relative
  std::string data;
  bool executable = false;

  friend bool operator==(const Entry&, const Entry&) = default;
};

/// POSIX ustar with entries sorted by path, mtime/uid/gid zeroed and no
/// owner names, so equal file trees always produce equal bytes. Only
/// regular files are stored; directories are implied by paths.
std::string write(std::vector<Entry> entries);

/// Throws Errc::kIntegrityError on checksum or framing errors and on
/// absolute or `..` paths.
std::vector<Entry> read(std::string_view archive);

/// Returns true for relative paths to leave out of the archive. Directories
/// are passed with a trailing '/'; excluding one prunes its subtree.
using ExcludeFn = std::function<bool(std::string_view rel)>;

std::string pack_directory(const std::filesystem::path& dir, const ExcludeFn& exclude = {});
void unpack(std::string_view archive, const std::filesystem::path& dest);

}  // namespace bricks::tar
