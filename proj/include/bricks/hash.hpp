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

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace bricks {

/// A 32-hex-digit MD5 digest. `is_dir` marks digests of canonical directory
/// manifests, which render with a `.dir` suffix.
class ContentHash {
 public:
  ContentHash() = default;

  /// Throws Errc::kBadHash unless `digest` is 32 lowercase hex chars.
  ContentHash(std::string digest, bool is_dir);

  /// Parses `<32hex>` or `<32hex>.dir`.
  static ContentHash parse(std::string_view text);
  static std::optional<ContentHash> try_parse(std::string_view text);

  const std::string& digest() const { return digest_; }
  bool is_dir() const { return is_dir_; }
  bool empty() const { return digest_.empty(); }

  std::string str() const { return is_dir_ ? digest_ + ".dir" : digest_; }

  friend bool operator==(const ContentHash&, const ContentHash&) = default;
  friend auto operator<=>(const ContentHash&, const ContentHash&) = default;

 private:
  std::string digest_;
  bool is_dir_ = false;
};

bool is_md5_digest(std::string_view text);
bool is_hex(std::string_view text);

/// Incremental MD5 over a byte stream.
class Md5 {
 public:
  Md5();
  ~Md5();
  Md5(Md5&&) noexcept;
  Md5& operator=(Md5&&) noexcept;

  void update(std::string_view bytes);
  /// Lowercase hex digest. The hasher must not be updated afterwards.
  std::string finish();

 private:
  struct State;
  std::unique_ptr<State> state_;
};

/// MD5 of an in-memory buffer; never a directory digest.
ContentHash hash_bytes(std::string_view data);

/// MD5 of a regular file's contents, streamed. Returns the digest and size.
std::pair<ContentHash, std::uint64_t> hash_file(const std::filesystem::path& path);

/// Lowercase hex SHA-1, used for registry commit ids.
std::string sha1_hex(std::string_view data);

}  // namespace bricks
