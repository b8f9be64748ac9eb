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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fail.

#include <httplib.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bricks/cli.hpp"
#include "bricks/content_store.hpp"
#include "bricks/installer.hpp"
#include "bricks/pipeline.hpp"
#include "bricks/registry.hpp"
#include "dag_harness.hpp"
#include "md5_oracle.hpp"
#include "test_util.hpp"

namespace bricks {
namespace {

using testing::BrickSpec;
using testing::FixtureRegistry;
using testing::Gen;
using testing::TempDir;

// Collects failed expectations for one criterion.
class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 8) failures_.push_back(what);
    if (!ok) ++failed_;
  }
  void note(const std::string& s) { notes_ += (notes_.empty() ? "" : "; ") + s; }
  bool ok() const { return failed_ == 0; }
  std::string detail() const {
    if (ok()) return notes_;
    std::string out = std::to_string(failed_) + " failed: ";
    for (std::size_t i = 0; i < failures_.size(); ++i) out += (i ? " | " : "") + failures_[i];
    return out;
  }

 private:
  std::vector<std::string> failures_;
  std::size_t failed_ = 0;
  std::string notes_;
};

std::string str(std::uint64_t v) { return std::to_string(v); }

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

BrickRef brick(const std::string& text) { return parse_brick_ref(text, kDefaultOrg); }

// Every payload file under an installed brick matches its lock digest, as
// computed by the independent MD5. Returns the number of files checked.
std::size_t check_payload(Checker& c, const fs::path& brick_dir, const ContentStore& store) {
  std::size_t files = 0;
  auto lock = parse_lockfile(testing::read_text(brick_dir / "brick.lock"));
  for (const auto& out : payload_outs(lock)) {
    auto path = brick_dir / std::string(path_key(out.path));
    if (!out.hash.is_dir()) {
      c.expect(testing::reference_md5(testing::read_text(path)) == out.hash.digest(),
               "md5 of " + out.path);
      ++files;
      continue;
    }
    auto manifest = store.read_dir_manifest(out.hash);
    c.expect(testing::reference_md5(serialize_dir_manifest(manifest)) == out.hash.digest(),
             "dir manifest digest of " + out.path);
    std::size_t on_disk = 0;
    for (const auto& e : fs::recursive_directory_iterator(path)) {
      if (fs::is_regular_file(e.path())) ++on_disk;
    }
    c.expect(on_disk == manifest.entries.size(), "member count of " + out.path);
    for (const auto& e : manifest.entries) {
      c.expect(testing::reference_md5(testing::read_text(path / e.relpath)) == e.hash.digest(),
               "md5 of " + out.path + e.relpath);
      ++files;
    }
  }
  return files;
}

void make_writable(const fs::path& root) {
  std::error_code ec;
  if (!fs::exists(root, ec)) return;
  fs::permissions(root, fs::perms::owner_all, fs::perm_options::add, ec);
  for (auto it = fs::recursive_directory_iterator(root, ec); it != fs::recursive_directory_iterator();
       it.increment(ec)) {
    if (it->is_directory(ec) && !it->is_symlink(ec)) {
      fs::permissions(it->path(), fs::perms::owner_all, fs::perm_options::add, ec);
    }
  }
}

void wipe(const fs::path& root) {
  make_writable(root);
  fs::remove_all(root);
}

// ---------------------------------------------------------------------------

void install_steps(Checker& c) {
  auto t0 = std::chrono::steady_clock::now();
  FixtureRegistry reg;
  BrickSpec spec;
  spec.files["hgnc_complete_set.parquet"] = "PAR1 hgnc complete set PAR1";
  auto commit = reg.publish("biobricks-ai", "hgnc", spec);
  TempDir dir;
  LibraryLayout lib{dir / "library"};
  auto client = reg.client();

  std::vector<std::string> steps;
  std::vector<std::string> hook_order;
  InstallHooks hooks;
  hooks.log = [&](const std::string& line) {
    if (line.starts_with("step ")) steps.push_back(line);
  };
  hooks.after_step = [&](InstallStep s) { hook_order.emplace_back(step_name(s)); };
  auto r = install(lib, *client, brick("hgnc"), hooks);
  c.expect(steps == std::vector<std::string>{"step snapshot done", "step enumerate done",
                                             "step fetch done", "step link done"},
           "step log sequence");
  c.expect(hook_order == std::vector<std::string>{"snapshot", "enumerate", "fetch", "link"},
           "hook sequence");
  c.expect(r.path == lib.brick_dir("biobricks-ai", "hgnc", commit), "install path");
  c.expect(fs::exists(r.path / "brick/hgnc_complete_set.parquet"), "asset materialized");

  reg.server().stats().reset();
  steps.clear();
  auto again = install(lib, *client, brick("hgnc"), hooks);
  auto& st = reg.server().stats();
  c.expect(again.already_installed, "second install is a no-op");
  c.expect(steps.empty(), "no steps on re-install");
  c.expect(st.snapshot_bytes.load() == 0 && st.snapshot_gets.load() == 0, "0 snapshot bytes");
  c.expect(st.blob_gets.load() == 0, "0 blob fetches");
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0);
  c.expect(ms < std::chrono::seconds(5), "runtime " + str(ms.count()) + " ms");
  c.note("runtime " + str(ms.count()) + " ms; re-install snapshot bytes " +
         str(st.snapshot_bytes.load()) + ", blob fetches " + str(st.blob_gets.load()));
}

void cache_dedup(Checker& c) {
  FixtureRegistry reg;
  BrickSpec a, b;
  for (int i = 0; i < 3; ++i) {
    auto body = "shared asset " + std::to_string(i);
    a.files["shared_" + std::to_string(i) + ".parquet"] = body;
    b.files["shared_" + std::to_string(i) + ".parquet"] = body;
  }
  a.files["a_only_1.parquet"] = "a1";
  a.files["a_only_2.parquet"] = "a2";
  b.files["b_only_1.parquet"] = "b1";
  b.files["b_only_2.parquet"] = "b2";
  reg.publish("biobricks-ai", "brick-a", a);
  reg.publish("biobricks-ai", "brick-b", b);
  TempDir dir;
  LibraryLayout lib{dir / "library"};
  auto client = reg.client();
  auto ra = install(lib, *client, brick("brick-a"));
  auto rb = install(lib, *client, brick("brick-b"));
  auto files = testing::count_blob_files(lib.cache());
  auto fetches = reg.server().stats().blob_gets.load();
  c.expect(files == 7, "cache holds " + str(files) + " blob files");
  c.expect(fetches == 7, "registry served " + str(fetches) + " blobs");
  c.expect(ra.fetched + rb.fetched == 7, "installer counted " + str(ra.fetched + rb.fetched));
  c.note(str(files) + " blob files, " + str(fetches) + " fetches");
}

void append_only(Checker& c) {
  FixtureRegistry reg;
  BrickSpec a;
  for (int i = 0; i < 10; ++i) {
    a.files["pubmed/part-" + std::to_string(i) + ".parquet"] =
        "partition " + std::to_string(i) + std::string(1000, 'x');
  }
  BrickSpec b = a;
  b.files["pubmed/part-10.parquet"] = "partition 10";
  b.files["pubmed/part-11.parquet"] = "partition 11";
  auto ca = reg.publish("biobricks-ai", "pubmed", a);
  auto cb = reg.publish("biobricks-ai", "pubmed", b);
  TempDir dir;
  LibraryLayout lib{dir / "library"};
  auto client = reg.client();
  install(lib, *client, brick("pubmed@" + ca));
  reg.server().stats().reset();
  auto r = install(lib, *client, brick("pubmed@" + cb));
  auto fetches = reg.server().stats().blob_gets.load();
  c.expect(fetches == 2, "B fetched " + str(fetches) + " blobs");
  c.expect(r.fetched == 2 && r.total == 12, "installer reports " + str(r.fetched) + "/" + str(r.total));
  c.note("B fetched " + str(fetches) + " of " + str(r.total));
}

int lines_in(const fs::path& p) {
  std::error_code ec;
  if (!fs::exists(p, ec)) return 0;
  auto t = testing::read_text(p);
  return static_cast<int>(std::count(t.begin(), t.end(), '\n'));
}

void pipeline_minimality(Checker& c) {
  TempDir dir;
  fs::create_directories(dir / ".counts");
  testing::write_text(dir / "remote/version", "2024-01\n");
  testing::write_text(dir / "remote/smrt.csv", "inchi,rt\nInChI=1S/CH4/h1H4,402.1\n");
  auto manifest = parse_manifest(R"(stages:
  status:
    cmd: echo x >> .counts/status && cp remote/version status.txt
    outs: [status.txt]
  download:
    cmd: echo x >> .counts/download && mkdir -p download && cp remote/smrt.csv download/smrt.csv
    deps: [status.txt]
    outs: [download/]
  process:
    cmd: echo x >> .counts/process && tr , '\t' < download/smrt.csv > brick/smrt_dataset.parquet
    deps: [download/]
    outs: [brick/smrt_dataset.parquet]
)");
  auto counts = [&] {
    return std::vector<int>{lines_in(dir / ".counts/status"), lines_in(dir / ".counts/download"),
                            lines_in(dir / ".counts/process")};
  };
  auto run = [&] { return repro(dir.path(), manifest, load_lockfile(dir.path())); };

  auto first = run();
  c.expect(first.ok() && first.executed.size() == 3, "(a) first run executed " + str(first.executed.size()));
  c.expect(counts() == std::vector<int>{1, 1, 1}, "(a) counters");

  auto second = run();
  c.expect(second.executed == std::vector<std::string>{"status"}, "(b) only status executed");
  c.expect(second.skipped == std::vector<std::string>{"download", "process"}, "(b) two skipped");
  c.expect(counts() == std::vector<int>{2, 1, 1}, "(b) counters");

  // Flip one byte of the downloaded file in place.
  auto path = dir / "download/smrt.csv";
  auto bytes = testing::read_text(path);
  bytes[bytes.size() - 2] = bytes[bytes.size() - 2] == '1' ? '2' : '1';
  testing::write_text(path, bytes);
  auto third = run();
  // status has no deps and runs every time; of the data stages only process reruns.
  c.expect(third.ok(), "(c) run ok");
  c.expect(third.executed == std::vector<std::string>{"status", "process"}, "(c) executed set");
  c.expect(counts() == std::vector<int>{3, 1, 2}, "(c) counters");
  c.expect(contains(testing::read_text(dir / "brick/smrt_dataset.parquet"), "402.2"),
           "(c) process consumed the edited byte");
  auto cs = counts();
  c.note("counters status/download/process = " + str(cs[0]) + "/" + str(cs[1]) + "/" + str(cs[2]));
}

void staleness_oracle(Checker& c) {
  Gen gen(20240501);
  int dags = 0, rounds = 0;
  for (int trial = 0; trial < 500; ++trial) {
    TempDir dir;
    testing::DagHarness dag(gen, dir.path(), 8);
    auto err = dag.run_and_check();
    ++rounds;
    for (int round = 0; round < 2 && err.empty(); ++round) {
      auto edits = dag.mutate(gen);
      err = dag.run_and_check();
      ++rounds;
      if (!err.empty()) err = edits + ": " + err;
    }
    if (err.empty()) err = dag.check_plan();
    c.expect(err.empty(), "dag " + std::to_string(trial) + ": " + err);
    ++dags;
  }
  c.note(std::to_string(dags) + " dags, " + std::to_string(rounds) + " plan comparisons");
}

void integrity_round_trip(Checker& c) {
  FixtureRegistry reg;
  TempDir dir;
  auto env = testing::cli_env(dir / "home", dir / "library", reg.url());
  auto work = dir / "smrt";
  testing::write_text(work / "input.txt", "seed 1\n");
  testing::write_text(work / "brick.yaml", R"(stages:
  tables:
    cmd: mkdir -p brick/tables && seq 1 20000 > brick/tables/big.csv && printf 'a\n' > brick/tables/a.csv && mkdir -p brick/tables/sub && cp input.txt brick/tables/sub/seed.txt
    deps: [input.txt]
    outs: [brick/tables/]
  main:
    cmd: cat input.txt brick/tables/a.csv > brick/smrt_dataset.parquet
    deps: [brick/tables/]
    outs: [brick/smrt_dataset.parquet]
)");
  auto w = work.string();
  auto repro_r = testing::run({"-C", w, "repro", "-q"}, env);
  c.expect(repro_r.code == 0, "repro: " + repro_r.err);
  auto push = testing::run({"-C", w, "push"}, env);
  c.expect(push.code == 0, "push: " + push.err);
  wipe(dir / "library");
  auto inst = testing::run({"install", "smrt"}, env);
  c.expect(inst.code == 0, "install: " + inst.err);
  if (inst.code != 0) return;
  LibraryLayout lib{dir / "library"};
  auto brick_dir = find_installed(lib, brick("smrt"));
  ContentStore store(lib.cache());
  auto files = check_payload(c, brick_dir, store);
  c.expect(files == 4, "checked " + str(files) + " files");
  auto verify = testing::run({"cache", "verify"}, env);
  c.expect(verify.code == 0, "cache verify: " + verify.out + verify.err);
  c.note(str(files) + " files match their lock digests; " + verify.out.substr(0, verify.out.size() - 1));
}

void hash_oracle(Checker& c) {
  c.expect(testing::reference_md5("") == "d41d8cd98f00b204e9800998ecf8427e", "oracle empty");
  c.expect(testing::reference_md5("hello") == "5d41402abc4b2a76b9719d911017c592", "oracle hello");
  c.expect(hash_bytes("").digest() == testing::reference_md5(""), "empty");
  c.expect(hash_bytes("hello").digest() == testing::reference_md5("hello"), "hello");
  Gen gen(7);
  int agree = 0;
  for (int i = 0; i < 200; ++i) {
    auto data = gen.bytes_upto(i < 100 ? 200 : 5000);
    bool ok = hash_bytes(data).digest() == testing::reference_md5(data);
    c.expect(ok, "random string " + std::to_string(i));
    agree += ok;
  }
  c.note(std::to_string(agree) + "/200 random strings agree");
}

void dependency_workflow(Checker& c) {
  FixtureRegistry reg;
  BrickSpec tox, hgnc;
  tox.files["toxrefdb.sqlite"] = "SQLite format 3 tox";
  hgnc.files["hgnc_complete_set.parquet"] = "PAR1 hgnc PAR1";
  reg.publish("biobricks-ai", "toxrefdb", tox);
  reg.publish("biobricks-ai", "hgnc", hgnc);
  TempDir dir;
  auto env = testing::cli_env(dir / "home", dir / "library", reg.url());
  auto w = (dir / "project").string();
  fs::create_directories(w);
  c.expect(testing::run({"-C", w, "init"}, env).code == 0, "init");
  c.expect(testing::run({"-C", w, "add", "toxrefdb"}, env).code == 0, "add toxrefdb");
  c.expect(testing::run({"-C", w, "add", "biobricks-ai/hgnc"}, env).code == 0, "add hgnc");
  auto deps = parse_dependencies(testing::read_text(dependencies_path(w)));
  c.expect(deps.entries.size() == 2, "two pins");
  reg.server().stats().reset();
  auto pull = testing::run({"-C", w, "pull"}, env);
  c.expect(pull.code == 0, "pull: " + pull.err);
  LibraryLayout lib{dir / "library"};
  for (const auto& e : deps.entries) {
    c.expect(is_installed(lib.brick_dir(e.ref.org, e.ref.name, e.ref.commit)),
             e.ref.id() + " installed at its pin");
  }
  auto first = std::count(pull.out.begin(), pull.out.end(), '\n');
  reg.server().stats().reset();
  auto again = testing::run({"-C", w, "pull"}, env);
  c.expect(again.code == 0, "second pull");
  c.expect(!contains(again.out, "installed "), "second pull installed nothing");
  c.expect(reg.server().stats().snapshot_gets.load() == 0 && reg.server().stats().blob_gets.load() == 0,
           "second pull downloaded nothing");
  c.note("first pull: " + str(static_cast<std::uint64_t>(first)) + " installs; second pull: " +
         (contains(again.out, "installed ") ? "installs" : "0 installs"));
}

void auth_gating(Checker& c) {
  FixtureRegistry reg;
  const std::string secret = FixtureRegistry::kToken;
  BrickSpec spec;
  spec.files["hgnc_complete_set.parquet"] = "PAR1 auth PAR1";
  auto commit = reg.publish("o", "b", spec);
  auto blob = testing::reference_md5("PAR1 auth PAR1");
  TempDir dir;
  ContentStore store(dir / "cache");
  BrickSpec spec2 = spec;
  spec2.files["more.parquet"] = "more";
  auto [lock2, archive2] = FixtureRegistry::build(spec2, store, dir / "s");
  for (const auto& h : payload_blobs(lock2, store)) reg.server().blobs().put_bytes(store.read_blob(h));

  struct Call {
    std::string name;
    std::function<httplib::Result(httplib::Client&, const httplib::Headers&)> run;
    int ok_status;
  };
  std::vector<Call> calls = {
      {"GET /api/ping", [](auto& cl, auto& h) { return cl.Get("/api/ping", h); }, 200},
      {"GET commits", [](auto& cl, auto& h) { return cl.Get("/api/o/b/commits", h); }, 200},
      {"GET snapshot", [&](auto& cl, auto& h) { return cl.Get("/api/o/b/" + commit + "/snapshot.tar", h); }, 200},
      {"GET lock", [&](auto& cl, auto& h) { return cl.Get("/api/o/b/" + commit + "/lock", h); }, 200},
      {"GET blob", [&](auto& cl, auto& h) { return cl.Get("/blobs/" + blob, h); }, 200},
      {"HEAD blob", [&](auto& cl, auto& h) { return cl.Head("/blobs/" + blob, h); }, 200},
      {"PUT blob",
       [&](auto& cl, auto& h) {
         return cl.Put("/blobs/" + testing::reference_md5("fresh"), h, "fresh", "application/octet-stream");
       },
       201},
      {"POST commits",
       [&](auto& cl, auto& h) { return cl.Post("/api/o/b/commits", h, archive2, "application/x-tar"); }, 201},
  };
  std::vector<httplib::Headers> bad = {
      {},
      {{"Authorization", "Bearer wrong-token"}},
      {{"Authorization", "Basic " + secret}},
      {{"Authorization", "Bearer " + secret + "x"}},
      {{"Authorization", "Bearer "}},
  };
  int checked = 0;
  for (const auto& call : calls) {
    httplib::Client cl(reg.url());
    for (const auto& h : bad) {
      auto res = call.run(cl, h);
      c.expect(res && res->status == 401, call.name + " without a valid token");
      if (res) c.expect(!contains(res->body, secret), call.name + " body leaks token");
      ++checked;
    }
    auto res = call.run(cl, {{"Authorization", "Bearer " + secret}});
    c.expect(res && res->status == call.ok_status, call.name + " with the token");
    ++checked;
  }

  // Client and CLI: errors and logs never carry the token.
  const std::string wrong = "wr0ng-t0ken-xyz";
  try {
    reg.client(wrong)->list_commits("o", "b");
    c.expect(false, "client accepted a wrong token");
  } catch (const Error& e) {
    c.expect(e.code() == Errc::kAuthError, "client error code");
    c.expect(!contains(e.what(), wrong), "client error leaks token");
  }
  auto env_bad = testing::cli_env(dir / "home", dir / "library", reg.url(), wrong);
  auto r = testing::run({"install", "o/b"}, env_bad);
  c.expect(r.code == kExitAuth, "cli exit code " + std::to_string(r.code));
  c.expect(!contains(r.out + r.err, wrong), "cli output leaks wrong token");
  auto env_none = testing::cli_env(dir / "home", dir / "library", reg.url(), "");
  c.expect(testing::run({"install", "o/b"}, env_none).code == kExitAuth, "missing token exit code");

  auto env_ok = testing::cli_env(dir / "home", dir / "library", reg.url());
  std::string all;
  for (std::vector<std::string> args : {std::vector<std::string>{"install", "o/b"},
                                        {"assets", "o/b", "--json"},
                                        {"configure", "--show"},
                                        {"configure", "--check"}}) {
    auto out = testing::run(args, env_ok);
    c.expect(out.code == 0, args[0] + " with a valid token: " + out.err);
    all += out.out + out.err;
  }
  for (const auto& e : fs::recursive_directory_iterator(dir / "library")) {
    if (e.is_regular_file() && !contains(e.path().string(), "/cache/")) all += testing::read_text(e.path());
  }
  c.expect(!contains(all, secret), "valid token appears in output or library files");
  c.note(std::to_string(checked) + " endpoint requests checked");
}

// --- crash injection ---------------------------------------------------------

struct ServerProcess {
  pid_t pid = -1;
  int port = 0;
  ~ServerProcess() {
    if (pid > 0) {
      ::kill(pid, SIGKILL);
      ::waitpid(pid, nullptr, 0);
    }
  }
};

void start_server_process(ServerProcess& sp, const fs::path& storage, const std::string& token) {
  int fds[2];
  if (::pipe(fds) != 0) throw std::runtime_error("pipe failed");
  std::cout.flush();
  pid_t pid = ::fork();
  if (pid == 0) {
    ::close(fds[0]);
    RegistryServer server(ServerOptions{storage, {token}});
    int port = server.start("127.0.0.1", 0);
    if (::write(fds[1], &port, sizeof port) != sizeof port) ::_exit(1);
    ::close(fds[1]);
    for (;;) ::pause();
  }
  ::close(fds[1]);
  sp.pid = pid;
  if (::read(fds[0], &sp.port, sizeof sp.port) != sizeof sp.port) {
    ::close(fds[0]);
    throw std::runtime_error("registry process did not start");
  }
  ::close(fds[0]);
}

void crash_safety(Checker& c) {
  TempDir dir;
  const std::string token = "crash-token-1";
  ServerProcess server;
  start_server_process(server, dir / "storage", token);
  auto url = "http://127.0.0.1:" + std::to_string(server.port);

  BrickSpec spec;
  Gen gen(1010);
  for (int i = 0; i < 6; ++i) spec.files["t" + std::to_string(i) + ".parquet"] = gen.bytes(20000 + i * 5000);
  spec.dir_outs = {"parts"};
  for (int i = 0; i < 5; ++i) spec.files["parts/p" + std::to_string(i) + ".csv"] = gen.bytes(3000);
  ContentStore publisher(dir / "publisher");
  auto [lock, archive] = FixtureRegistry::build(spec, publisher, dir / "scratch");
  RegistryClient pub(RegistryEndpoint::make(url, token));
  auto commit = pub.push_brick("biobricks-ai", "crashy", archive, lock, publisher).commit;

  LibraryLayout lib{dir / "library"};
  auto brick_dir = lib.brick_dir("biobricks-ai", "crashy", commit);
  const std::vector<InstallStep> points = {InstallStep::kSnapshot, InstallStep::kEnumerate,
                                           InstallStep::kFetch, InstallStep::kLink};
  int kills = 0, absent = 0, complete = 0;
  for (int trial = 0; trial < 20; ++trial) {
    if (trial % 2 == 0) {
      wipe(lib.root);
    } else {
      wipe(brick_dir);  // keep a partly filled cache
    }
    for (auto point : points) {
      std::cout.flush();
      pid_t pid = ::fork();
      if (pid == 0) {
        try {
          RegistryClient client(RegistryEndpoint::make(url, token), {4, 0});
          InstallHooks hooks;
          hooks.after_step = [&](InstallStep s) {
            if (s != point) return;
            if ((trial + static_cast<int>(point)) % 2 == 0) ::raise(SIGKILL);
            ::_exit(0);
          };
          install(lib, client, brick("biobricks-ai/crashy@" + commit), hooks);
          ::_exit(3);
        } catch (...) {
          ::_exit(4);
        }
      }
      int status = 0;
      ::waitpid(pid, &status, 0);
      bool killed = (WIFSIGNALED(status) && WTERMSIG(status) == SIGKILL) ||
                    (WIFEXITED(status) && WEXITSTATUS(status) == 0);
      // A brick that was already complete makes the installer return early.
      bool skipped = WIFEXITED(status) && WEXITSTATUS(status) == 3 && fs::exists(brick_dir);
      c.expect(killed || skipped, "child status " + std::to_string(status));
      kills += killed;

      std::error_code ec;
      if (fs::exists(brick_dir, ec)) {
        ++complete;
        c.expect(is_installed(brick_dir), "partial brick dir after kill at " + std::string(step_name(point)));
        ContentStore store(lib.cache());
        Checker inner;
        check_payload(inner, brick_dir, store);
        c.expect(inner.ok(), "visible brick incomplete: " + inner.detail());
      } else {
        ++absent;
      }
      if (fs::exists(lib.cache(), ec)) {
        auto report = ContentStore(lib.cache()).verify();
        c.expect(report.ok(), "cache verify after kill at " + std::string(step_name(point)));
      }
    }
    // Recovery: a normal install after the crashes succeeds.
    RegistryClient client(RegistryEndpoint::make(url, token), {4, 0});
    auto r = install(lib, client, brick("biobricks-ai/crashy@" + commit));
    c.expect(is_installed(r.path), "re-install after crashes");
    ContentStore store(lib.cache());
    check_payload(c, r.path, store);
    c.expect(store.verify().ok(), "cache verify after recovery");
  }
  c.note(std::to_string(kills) + " injected crashes; brick dir absent " + std::to_string(absent) +
         " times, complete " + std::to_string(complete) + " times, never partial");
}

struct Criterion {
  int number;
  std::string title;
  std::function<void(Checker&)> run;
};

}  // namespace
}  // namespace bricks

int main() {
  using bricks::Checker;
  std::vector<bricks::Criterion> criteria = {
      {1, "four-step install and no-op re-install", bricks::install_steps},
      {2, "cache dedup across bricks", bricks::cache_dedup},
      {3, "append-only incremental install", bricks::append_only},
      {4, "pipeline minimality and early cutoff", bricks::pipeline_minimality},
      {5, "staleness oracle equivalence", bricks::staleness_oracle},
      {6, "content integrity round trip", bricks::integrity_round_trip},
      {7, "hash oracle", bricks::hash_oracle},
      {8, "dependency workflow", bricks::dependency_workflow},
      {9, "auth gating", bricks::auth_gating},
      {10, "crash safety", bricks::crash_safety},
  };
  int failed = 0;
  for (const auto& crit : criteria) {
    Checker c;
    auto t0 = std::chrono::steady_clock::now();
    try {
      crit.run(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0);
    std::cout << (c.ok() ? "PASS" : "FAIL") << " criterion " << crit.number << ": " << crit.title
              << " (" << c.detail() << ") [" << ms.count() << " ms]" << std::endl;
    failed += !c.ok();
  }
  return failed == 0 ? 0 : 1;
}
