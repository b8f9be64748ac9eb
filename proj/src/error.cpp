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

#include "bricks/error.hpp"

namespace bricks {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::kMalformedRef: return "MalformedRef";
    case Errc::kSyntaxError: return "SyntaxError";
    case Errc::kCycleError: return "CycleError";
    case Errc::kDuplicateOutput: return "DuplicateOutput";
    case Errc::kBadHash: return "BadHash";
    case Errc::kDuplicateEntry: return "DuplicateEntry";
    case Errc::kUnpinnedEntry: return "UnpinnedEntry";
    case Errc::kIoError: return "IoError";
    case Errc::kCorruptCache: return "CorruptCache";
    case Errc::kMissingBlob: return "MissingBlob";
    case Errc::kAuthError: return "AuthError";
    case Errc::kNotFound: return "NotFound";
    case Errc::kNetworkError: return "NetworkError";
    case Errc::kIntegrityError: return "IntegrityError";
    case Errc::kAmbiguousPrefix: return "AmbiguousPrefix";
    case Errc::kConflictError: return "ConflictError";
    case Errc::kAssetNameCollision: return "AssetNameCollision";
    case Errc::kNotInstalled: return "NotInstalled";
    case Errc::kStageFailed: return "StageFailed";
    case Errc::kHashMismatch: return "HashMismatch";
    case Errc::kNotConfigured: return "NotConfigured";
    case Errc::kUsageError: return "UsageError";
  }
  return "Unknown";
}

void fail(Errc code, const std::string& message) { throw Error(code, message); }

}  // namespace bricks
