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

// Shared helpers for the YAML-subset files. Parsing goes through yaml-cpp;
// emission is hand-rolled so the canonical byte layout is under our control.

#pragma once

#include <yaml-cpp/yaml.h>

#include <string>
#include <string_view>
#include <vector>

#include "bricks/error.hpp"

namespace bricks::yaml_text {

inline YAML::Node load(std::string_view text, std::string_view what) {
  try {
    return YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    fail(Errc::kSyntaxError, std::string(what) + ": " + e.what());
  }
}

[[noreturn]] inline void syntax(std::string_view what, const std::string& msg) {
  fail(Errc::kSyntaxError, std::string(what) + ": " + msg);
}

inline std::string scalar(const YAML::Node& node, std::string_view what,
                          std::string_view field) {
  if (!node.IsScalar()) syntax(what, "'" + std::string(field) + "' must be a scalar");
  return node.Scalar();
}

inline std::vector<std::string> string_list(const YAML::Node& node, std::string_view what,
                                            std::string_view field) {
  std::vector<std::string> out;
  if (!node || node.IsNull()) return out;
  if (!node.IsSequence()) syntax(what, "'" + std::string(field) + "' must be a list");
  for (const auto& item : node) out.push_back(scalar(item, what, field));
  return out;
}

/// Plain scalars are emitted bare; anything YAML could misread is
/// double-quoted with escapes.
inline bool is_plain_safe(std::string_view s) {
  if (s.empty()) return false;
  static constexpr std::string_view kReserved = "-?:,[]{}#&*!|>'\"%@`~ ";
  if (kReserved.find(s.front()) != std::string_view::npos) return false;
  if (s.back() == ' ' || s.back() == ':') return false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    if (c < 0x20 || c == 0x7f || c == '"' || c == '\'' || c == '\\') return false;
    if (c == '#' && s[i - 1] == ' ') return false;
    if (c == ':' && i + 1 < s.size() && s[i + 1] == ' ') return false;
  }
  static constexpr std::string_view kKeywords[] = {"null", "Null", "NULL", "~",   "true",
                                                   "True", "TRUE", "false", "False", "FALSE",
                                                   "yes",  "no",   "on",    "off",  "Yes",
                                                   "No",   "On",   "Off"};
  for (auto kw : kKeywords) {
    if (s == kw) return false;
  }
  return true;
}

inline std::string quote(std::string_view s) {
  if (is_plain_safe(s)) return std::string(s);
  std::string out = "\"";
  static constexpr char kDigits[] = "0123456789abcdef";
  for (unsigned char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (c < 0x20 || c == 0x7f) {
          out += "\\x";
          out.push_back(kDigits[c >> 4]);
          out.push_back(kDigits[c & 0xf]);
        } else {
          out.push_back(static_cast<char>(c));
        }
    }
  }
  out += "\"";
  return out;
}

}  // namespace bricks::yaml_text
