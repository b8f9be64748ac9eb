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

#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <set>

#include "bricks/error.hpp"
#include "bricks/model.hpp"
#include "test_util.hpp"

namespace bricks {
namespace {

using testing::Gen;

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::kUsageError;
}

// --- BrickRef --------------------------------------------------------------

TEST(BrickRef, BareNameUsesDefaultOrgAndLatest) {
  auto ref = parse_brick_ref("hgnc", "biobricks-ai");
  EXPECT_EQ(ref.org, "biobricks-ai");
  EXPECT_EQ(ref.name, "hgnc");
  EXPECT_TRUE(ref.is_latest());
  EXPECT_FALSE(ref.source_url.has_value());
}

TEST(BrickRef, OrgNameAndPrefix) {
  auto ref = parse_brick_ref("biobricks-ai/chemharmony@4f060", "other");
  EXPECT_EQ(ref.org, "biobricks-ai");
  EXPECT_EQ(ref.name, "chemharmony");
  EXPECT_EQ(ref.commit, "4f060");
  EXPECT_FALSE(ref.is_pinned());
  auto full = parse_brick_ref("a/b@" + std::string(40, 'c'), "x");
  EXPECT_TRUE(full.is_pinned());
}

TEST(BrickRef, UrlForms) {
  auto ref = parse_brick_ref("http://git.example.org:8080/mirror/acme/tox.git@ABCDEF12", "x");
  EXPECT_EQ(ref.org, "acme");
  EXPECT_EQ(ref.name, "tox");
  EXPECT_EQ(ref.commit, "abcdef12");
  ASSERT_TRUE(ref.source_url.has_value());
  EXPECT_EQ(*ref.source_url, "http://git.example.org:8080/mirror/acme/tox.git");
  auto latest = parse_brick_ref("https://user@example.org/acme/tox", "x");
  EXPECT_TRUE(latest.is_latest());
  EXPECT_EQ(latest.name, "tox");
}

TEST(BrickRef, RejectsMalformedText) {
  for (const std::string& bad : std::vector<std::string>{"", "a/b@4f0", "a/b@", "a/b@xyzxyz", "a/b/c", "/b", "a/", "a b",
                          "a/b@" + std::string(41, 'a'), "@12345", "http://host/onlyone"}) {
    EXPECT_EQ(code_of([&] { parse_brick_ref(bad, "org"); }), Errc::kMalformedRef) << bad;
  }
}

TEST(BrickRef, EveryAcceptedRefRerendersToItself) {
  Gen gen(101);
  for (int i = 0; i < 500; ++i) {
    std::string text;
    switch (gen.uniform(0, 3)) {
      case 0: text = gen.ident(); break;
      case 1: text = gen.ident() + "/" + gen.ident(); break;
      case 2:
        text = gen.ident() + "/" + gen.ident() + "@" +
               gen.hex(static_cast<std::size_t>(gen.uniform(5, 40)));
        break;
      default:
        text = "http://h" + gen.ident() + ".org/" + gen.ident() + "/" + gen.ident() +
               (gen.coin() ? ".git" : "") + (gen.coin() ? "@" + gen.hex(12) : "");
    }
    auto ref = parse_brick_ref(text, "dflt");
    EXPECT_EQ(parse_brick_ref(ref.str(), "unused"), ref) << text << " -> " << ref.str();
  }
}

// --- Manifest --------------------------------------------------------------

constexpr const char* kSmrtManifest = R"(stages:
  status:
    cmd: python scripts/status.py > status.txt
    outs:
      - status.txt
  download:
    cmd: python scripts/download.py
    deps:
      - status.txt
    outs:
      - ./download
  process:
    cmd: python scripts/process.py
    deps:
      - ./download/
    outs:
      - brick/smrt_dataset.parquet
)";

TEST(Manifest, ThreeStageChain) {
  auto m = parse_manifest(kSmrtManifest);
  ASSERT_EQ(m.stages.size(), 3u);
  EXPECT_EQ(m.stages[0].name, "status");
  EXPECT_TRUE(m.stages[0].deps.empty());
  EXPECT_EQ(m.stages[1].outs, std::vector<std::string>{"download"});
  EXPECT_EQ(m.stages[2].deps, std::vector<std::string>{"download/"});
  auto up = m.upstream();
  EXPECT_TRUE(up[0].empty());
  EXPECT_EQ(up[1], std::vector<std::size_t>{0});
  EXPECT_EQ(up[2], std::vector<std::size_t>{1});
  EXPECT_EQ(m.topological_order(), (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Manifest, EmptyStages) {
  EXPECT_TRUE(parse_manifest("stages: {}\n").stages.empty());
  EXPECT_EQ(serialize_manifest(Manifest{}), "stages: {}\n");
}

TEST(Manifest, DuplicateOutputRejected) {
  auto text = "stages:\n  a:\n    cmd: x\n    outs: [brick/x.parquet]\n"
              "  b:\n    cmd: y\n    outs: [brick/x.parquet]\n";
  EXPECT_EQ(code_of([&] { parse_manifest(text); }), Errc::kDuplicateOutput);
}

TEST(Manifest, CycleRejected) {
  auto text = "stages:\n  a:\n    cmd: x\n    deps: [q]\n    outs: [p]\n"
              "  b:\n    cmd: y\n    deps: [p]\n    outs: [q]\n";
  EXPECT_EQ(code_of([&] { parse_manifest(text); }), Errc::kCycleError);
}

TEST(Manifest, SyntaxErrors) {
  for (std::string bad : {"stages: [1, 2]\n", "nope: {}\n", "stages:\n  a:\n    deps: [x]\n",
                          "stages:\n  a:\n    cmd: x\n    extra: 1\n",
                          "stages:\n  a:\n    cmd: x\n    outs: [../up]\n",
                          "stages:\n  a:\n    cmd: x\n    outs: [/abs]\n",
                          "stages:\n  a:\n    cmd: x\n    deps: [f]\n    outs: [f]\n",
                          "stages:\n  a: {cmd: [x\n"}) {
    EXPECT_EQ(code_of([&] { parse_manifest(bad); }), Errc::kSyntaxError) << bad;
  }
}

TEST(Manifest, TopologicalTiesFollowFileOrder) {
  auto m = parse_manifest(
      "stages:\n  z:\n    cmd: x\n    deps: [a]\n    outs: [z]\n"
      "  a:\n    cmd: x\n    outs: [a]\n"
      "  m:\n    cmd: x\n    outs: [m]\n");
  EXPECT_EQ(m.topological_order(), (std::vector<std::size_t>{1, 0, 2}));
}

// Reference acceptance rule: no stage lists a path as both dep and out,
// every out key is unique, and the overlap graph between distinct stages has
// no cycle.
bool oracle_accepts(const Manifest& m) {
  auto key = [](const std::string& p) { return p.back() == '/' ? p.substr(0, p.size() - 1) : p; };
  auto overlap = [&](const std::string& a, const std::string& b) {
    auto x = key(a), y = key(b);
    return x == y || y.rfind(x + "/", 0) == 0 || x.rfind(y + "/", 0) == 0;
  };
  std::set<std::string> outs;
  for (const auto& s : m.stages) {
    for (const auto& o : s.outs) {
      for (const auto& d : s.deps) {
        if (key(o) == key(d)) return false;
      }
      if (!outs.insert(key(o)).second) return false;
    }
  }
  const auto n = m.stages.size();
  std::vector<std::vector<bool>> edge(n, std::vector<bool>(n, false));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a == b) continue;
      for (const auto& o : m.stages[a].outs) {
        for (const auto& d : m.stages[b].deps) edge[a][b] = edge[a][b] || overlap(o, d);
      }
    }
  }
  // Transitive closure; a cycle means some stage reaches itself.
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) edge[i][j] = edge[i][j] || (edge[i][k] && edge[k][j]);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (edge[i][i]) return false;
  }
  return true;
}

TEST(Manifest, AcceptsExactlyValidRandomGraphs) {
  Gen gen(2024);
  const std::vector<std::string> pool = {"a", "b", "c", "d/", "d/x", "d/y/", "e/f", "g", "brick/h"};
  int accepted = 0;
  for (int iter = 0; iter < 2000; ++iter) {
    Manifest m;
    int n = gen.uniform(1, 5);
    for (int i = 0; i < n; ++i) {
      Stage s{"s" + std::to_string(i), "true", {}, {}};
      std::set<std::string> used;
      for (int k = gen.uniform(0, 2); k > 0; --k) {
        auto p = gen.pick(pool);
        if (used.insert(p).second) s.deps.push_back(p);
      }
      for (int k = gen.uniform(0, 2); k > 0; --k) {
        auto p = gen.pick(pool);
        if (used.insert(p).second) s.outs.push_back(p);
      }
      m.stages.push_back(s);
    }
    bool expected = oracle_accepts(m);
    bool actual = true;
    try {
      parse_manifest(serialize_manifest(m));
    } catch (const Error&) {
      actual = false;
    }
    ASSERT_EQ(actual, expected) << serialize_manifest(m);
    accepted += expected ? 1 : 0;
    if (expected) {
      EXPECT_EQ(parse_manifest(serialize_manifest(m)), m);
    }
  }
  EXPECT_GT(accepted, 200);
  EXPECT_LT(accepted, 1800);
}

TEST(Manifest, QuotedScalarsRoundTrip) {
  Manifest m;
  m.stages.push_back({"odd", "echo 'a: b' # not a comment \"q\"\n\tx", {"in put"}, {"out:x"}});
  m.stages.push_back({"plain", "true", {}, {"brick/"}});
  EXPECT_EQ(parse_manifest(serialize_manifest(m)), m);
}

// --- Lockfile --------------------------------------------------------------

TEST(Lockfile, SingleOutRecord) {
  auto lock = parse_lockfile(
      "stages:\n  process:\n    outs:\n    - path: brick/smrt_dataset.parquet\n"
      "      md5: 0123456789abcdef0123456789abcdef\n      size: 12\n");
  ASSERT_EQ(lock.stages.size(), 1u);
  ASSERT_EQ(lock.stages[0].outs.size(), 1u);
  EXPECT_EQ(lock.stages[0].outs[0].path, "brick/smrt_dataset.parquet");
  EXPECT_EQ(lock.stages[0].outs[0].size, 12u);
  EXPECT_FALSE(lock.stages[0].outs[0].hash.is_dir());
}

TEST(Lockfile, BadDigest) {
  EXPECT_EQ(code_of([] {
              parse_lockfile("stages:\n  p:\n    outs:\n    - path: a\n      md5: xyz\n      size: 1\n");
            }),
            Errc::kBadHash);
}

TEST(Lockfile, SyntaxErrors) {
  for (std::string bad : {"stages: 3\n", "stages:\n  p:\n    outs:\n    - path: a\n      size: 1\n",
                          "stages:\n  p:\n    outs:\n    - path: a\n      md5: "
                          "0123456789abcdef0123456789abcdef\n      size: -1\n",
                          "stages:\n  p:\n    outs:\n    - path: ../a\n      md5: "
                          "0123456789abcdef0123456789abcdef\n      size: 1\n"}) {
    EXPECT_EQ(code_of([&] { parse_lockfile(bad); }), Errc::kSyntaxError) << bad;
  }
}

Lockfile random_lock(Gen& gen) {
  Lockfile lock;
  int n = gen.uniform(0, 5);
  for (int i = 0; i < n; ++i) {
    LockStage s;
    s.name = "st" + std::to_string(i);
    s.cmd = gen.coin() ? "run " + gen.ident() : "echo 'x: y' > " + gen.ident();
    for (int k = gen.uniform(0, 3); k > 0; --k) {
      s.deps.push_back({gen.ident() + "/" + gen.ident(), ContentHash(gen.hex(32), gen.coin(0.2)),
                        static_cast<std::uint64_t>(gen.uniform(0, 1 << 30))});
    }
    for (int k = gen.uniform(0, 3); k > 0; --k) {
      s.outs.push_back({"brick/" + gen.ident(), ContentHash(gen.hex(32), gen.coin(0.2)),
                        static_cast<std::uint64_t>(gen.uniform(0, 1 << 30))});
    }
    lock.stages.push_back(s);
  }
  return lock;
}

TEST(Lockfile, RoundTripsRandomValues) {
  Gen gen(55);
  for (int i = 0; i < 500; ++i) {
    auto lock = random_lock(gen);
    auto text = serialize_lockfile(lock);
    auto back = parse_lockfile(text);
    ASSERT_EQ(back, lock) << text;
    ASSERT_EQ(serialize_lockfile(back), text);
  }
}

TEST(Lockfile, PayloadOutsAreUniqueAndUnderBrick) {
  Lockfile lock;
  ContentHash h("0123456789abcdef0123456789abcdef", false);
  lock.stages.push_back({"a", "x", {}, {{"brick/a.parquet", h, 1}, {"status.txt", h, 1}}});
  lock.stages.push_back({"b", "y", {{"brick/a.parquet", h, 1}}, {{"brick/", h, 1}}});
  auto outs = payload_outs(lock);
  ASSERT_EQ(outs.size(), 2u);
  EXPECT_EQ(outs[0].path, "brick/a.parquet");
  EXPECT_EQ(outs[1].path, "brick/");
  EXPECT_TRUE(is_payload_path("brick"));
  EXPECT_TRUE(is_payload_path("brick/x"));
  EXPECT_FALSE(is_payload_path("bricks/x"));
}

// --- Dependencies ----------------------------------------------------------

TEST(Dependencies, TwoEntries) {
  std::string a(40, 'a'), b(40, 'b');
  auto deps = parse_dependencies("biobricks-ai/toxrefdb " + a + " https://x/toxrefdb\n" +
                                 "biobricks-ai/chembl\t" + b + "\thttps://x/chembl");
  ASSERT_EQ(deps.entries.size(), 2u);
  EXPECT_EQ(deps.entries[0].ref.name, "toxrefdb");
  EXPECT_EQ(deps.entries[1].ref.commit, b);
  EXPECT_EQ(deps.entries[1].url, "https://x/chembl");
}

TEST(Dependencies, EmptyAndCommentsOnly) {
  EXPECT_TRUE(parse_dependencies("").entries.empty());
  EXPECT_TRUE(parse_dependencies(std::string(kDependenciesHeader) + "\n   \n# x\n").entries.empty());
}

TEST(Dependencies, Errors) {
  std::string c(40, 'c');
  EXPECT_EQ(code_of([&] { parse_dependencies("a/b " + c + " u\na/b " + c + " v\n"); }),
            Errc::kDuplicateEntry);
  EXPECT_EQ(code_of([&] { parse_dependencies("a/b 4f060 u\n"); }), Errc::kUnpinnedEntry);
  EXPECT_EQ(code_of([&] { parse_dependencies("a/b " + c + "\n"); }), Errc::kSyntaxError);
  EXPECT_EQ(code_of([&] { parse_dependencies("ab " + c + " u\n"); }), Errc::kSyntaxError);
}

TEST(Dependencies, UpsertReplacesPin) {
  DependencySet deps;
  BrickRef r{"o", "n", std::string(40, '1'), std::nullopt};
  EXPECT_FALSE(deps.upsert({r, "u"}));
  r.commit = std::string(40, '2');
  EXPECT_TRUE(deps.upsert({r, "u"}));
  ASSERT_EQ(deps.entries.size(), 1u);
  EXPECT_EQ(deps.entries[0].ref.commit, r.commit);
}

TEST(Dependencies, RoundTripsRandomSets) {
  Gen gen(8);
  for (int i = 0; i < 300; ++i) {
    DependencySet deps;
    for (int k = gen.uniform(0, 6); k > 0; --k) {
      BrickRef r{gen.ident(), gen.ident(), gen.hex(40), std::nullopt};
      deps.upsert({r, "http://reg.example/" + r.org + "/" + r.name});
    }
    auto text = serialize_dependencies(deps);
    ASSERT_EQ(parse_dependencies(text), deps) << text;
  }
}

// --- Paths -----------------------------------------------------------------

TEST(WorkspacePath, Normalization) {
  EXPECT_EQ(normalize_workspace_path("./download"), "download");
  EXPECT_EQ(normalize_workspace_path("./download/"), "download/");
  EXPECT_EQ(normalize_workspace_path("a//b/./c"), "a/b/c");
  EXPECT_THROW(normalize_workspace_path("../x"), Error);
  EXPECT_THROW(normalize_workspace_path("/x"), Error);
  EXPECT_THROW(normalize_workspace_path(""), Error);
  EXPECT_TRUE(paths_overlap("download/", "download/a.csv"));
  EXPECT_TRUE(paths_overlap("download/a.csv", "download"));
  EXPECT_FALSE(paths_overlap("down", "download"));
}

}  // namespace
}  // namespace bricks
