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
#include <string>
#include <string_view>

namespace bricks::fsutil {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path);

/// Writes via a sibling temp file, fsync, then rename. Readers see either
/// the old content or the new content, never a prefix.
void write_file_atomic(const fs::path& path, std::string_view data);

/// Random suffix usable in temp file and staging directory names.
std::string random_token();

/// True if `rel` is non-empty, relative, and has no `..` segment.
bool is_safe_relative(std::string_view rel);

/// RAII exclusive advisory lock (flock) on `path`, created if absent.
class FileLock {
 public:
  explicit FileLock(const fs::path& path);
  ~FileLock();
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

}  // namespace bricks::fsutil
