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

#include "bricks/hash.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>

#include "bricks/error.hpp"

namespace bricks {

namespace {

std::string to_hex(const unsigned char* bytes, unsigned int len) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kDigits[bytes[i] >> 4]);
    out.push_back(kDigits[bytes[i] & 0xf]);
  }
  return out;
}

struct EvpDeleter {
  void operator()(EVP_MD_CTX* ctx) const { EVP_MD_CTX_free(ctx); }
};

}  // namespace

bool is_hex(std::string_view text) {
  for (char c : text) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

bool is_md5_digest(std::string_view text) {
  return text.size() == 32 && is_hex(text);
}

ContentHash::ContentHash(std::string digest, bool is_dir)
    : digest_(std::move(digest)), is_dir_(is_dir) {
  if (!is_md5_digest(digest_)) {
    fail(Errc::kBadHash, "malformed md5 digest '" + digest_ + "'");
  }
}

std::optional<ContentHash> ContentHash::try_parse(std::string_view text) {
  bool dir = false;
  if (text.ends_with(".dir")) {
    dir = true;
    text.remove_suffix(4);
  }
  if (!is_md5_digest(text)) return std::nullopt;
  return ContentHash(std::string(text), dir);
}

ContentHash ContentHash::parse(std::string_view text) {
  auto parsed = try_parse(text);
  if (!parsed) fail(Errc::kBadHash, "malformed md5 digest '" + std::string(text) + "'");
  return *parsed;
}

struct Md5::State {
  std::unique_ptr<EVP_MD_CTX, EvpDeleter> ctx{EVP_MD_CTX_new()};
};

Md5::Md5() : state_(std::make_unique<State>()) {
  if (!state_->ctx || EVP_DigestInit_ex(state_->ctx.get(), EVP_md5(), nullptr) != 1) {
    throw std::runtime_error("EVP md5 init failed");
  }
}

Md5::~Md5() = default;
Md5::Md5(Md5&&) noexcept = default;
Md5& Md5::operator=(Md5&&) noexcept = default;

void Md5::update(std::string_view bytes) {
  if (bytes.empty()) return;
  EVP_DigestUpdate(state_->ctx.get(), bytes.data(), bytes.size());
}

std::string Md5::finish() {
  std::array<unsigned char, EVP_MAX_MD_SIZE> out{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(state_->ctx.get(), out.data(), &len);
  return to_hex(out.data(), len);
}

ContentHash hash_bytes(std::string_view data) {
  Md5 md5;
  md5.update(data);
  return ContentHash(md5.finish(), false);
}

std::pair<ContentHash, std::uint64_t> hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::kIoError, "cannot open " + path.string());
  Md5 md5;
  std::uint64_t size = 0;
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    auto n = in.gcount();
    if (n <= 0) break;
    md5.update(std::string_view(buf.data(), static_cast<std::size_t>(n)));
    size += static_cast<std::uint64_t>(n);
  }
  if (in.bad()) fail(Errc::kIoError, "read failed: " + path.string());
  return {ContentHash(md5.finish(), false), size};
}

std::string sha1_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> out{};
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha1(), nullptr);
  return to_hex(out.data(), len);
}

}  // namespace bricks
