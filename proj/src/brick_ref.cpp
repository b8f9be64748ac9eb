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

#include <algorithm>
#include <cctype>

#include "bricks/error.hpp"
#include "bricks/model.hpp"

namespace bricks {

namespace {

[[noreturn]] void malformed(std::string_view text, const std::string& why) {
  fail(Errc::kMalformedRef, "malformed brick reference '" + std::string(text) + "': " + why);
}

std::string parse_commit(std::string_view full_text, std::string_view commit) {
  if (commit == kLatest) return std::string(kLatest);
  std::string lowered(commit);
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (!is_hex(lowered)) malformed(full_text, "commit must be hex");
  if (lowered.size() < kMinCommitPrefix) {
    malformed(full_text, "commit prefix shorter than " + std::to_string(kMinCommitPrefix));
  }
  if (lowered.size() > kFullCommitLength) malformed(full_text, "commit longer than 40 hex");
  return lowered;
}

}  // namespace

bool is_identifier(std::string_view text) {
  if (text.empty() || text == "." || text == "..") return false;
  return std::all_of(text.begin(), text.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '.' || c == '_' || c == '-';
  });
}

std::string BrickRef::str() const {
  std::string out = source_url ? *source_url : id();
  if (!is_latest()) out += "@" + commit;
  return out;
}

BrickRef parse_brick_ref(std::string_view text, std::string_view default_org) {
  if (text.empty()) malformed(text, "empty");
  BrickRef ref;

  std::string_view body = text;
  std::string_view commit = kLatest;
  auto scheme = text.find("://");
  auto at = text.rfind('@');
  // An '@' inside the authority of a URL (user@host) is not a commit marker.
  if (at != std::string_view::npos &&
      (scheme == std::string_view::npos || at > text.find('/', scheme + 3))) {
    body = text.substr(0, at);
    commit = text.substr(at + 1);
    if (commit.empty()) malformed(text, "empty commit after '@'");
  }
  ref.commit = parse_commit(text, commit);

  if (scheme != std::string_view::npos) {
    std::string url(body);
    while (url.ends_with('/')) url.pop_back();
    auto path_start = url.find('/', scheme + 3);
    if (path_start == std::string::npos) malformed(text, "URL has no repository path");
    std::string_view path = std::string_view(url).substr(path_start + 1);
    auto slash = path.rfind('/');
    if (slash == std::string_view::npos) malformed(text, "URL must end in /<org>/<name>");
    std::string_view name = path.substr(slash + 1);
    if (name.ends_with(".git")) name.remove_suffix(4);
    std::string_view org_part = path.substr(0, slash);
    std::string_view org = org_part.substr(org_part.rfind('/') + 1);
    ref.org = std::string(org);
    ref.name = std::string(name);
    ref.source_url = url;
  } else {
    auto slash = body.find('/');
    if (slash == std::string_view::npos) {
      ref.org = std::string(default_org);
      ref.name = std::string(body);
    } else {
      ref.org = std::string(body.substr(0, slash));
      ref.name = std::string(body.substr(slash + 1));
    }
  }
  if (!is_identifier(ref.org)) malformed(text, "illegal organisation '" + ref.org + "'");
  if (!is_identifier(ref.name)) malformed(text, "illegal name '" + ref.name + "'");
  return ref;
}

}  // namespace bricks
