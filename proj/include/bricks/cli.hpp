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

// The `bricks` command line.
//
// Exit codes: 0 success, 1 operational failure, 2 usage or configuration
// error, 3 authentication failure. Results meant for scripts go to `out`;
// progress and diagnostics go to `err`.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "bricks/config.hpp"
#include "bricks/error.hpp"

namespace bricks {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitAuth = 3;

int exit_code_for(Errc code);

/// Runs one command. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const Environment& env);

}  // namespace bricks
