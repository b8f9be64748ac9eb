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

#include "bricks/cli.hpp"

#include <unistd.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <iomanip>
#include <iostream>
#include <optional>
#include <ostream>

#include "bricks/content_store.hpp"
#include "bricks/installer.hpp"
#include "bricks/pipeline.hpp"
#include "bricks/registry.hpp"

namespace bricks {

namespace {

using json = nlohmann::json;

constexpr std::string_view kVersion = "0.4.0";

struct Context {
  std::ostream& out;
  std::ostream& err;
  const Environment& env;
  fs::path workdir;
  ConfigValues flags;
};

Config config_of(const Context& ctx) { return load_config(ctx.env, ctx.flags); }

LibraryLayout library_of(const Config& config) {
  if (config.library.empty()) {
    fail(Errc::kNotConfigured, "no library configured; run `bricks configure --library <dir>`");
  }
  return LibraryLayout{config.library};
}

RegistryClient client_of(const Config& config, std::optional<std::string> base = std::nullopt) {
  if (!base) {
    if (config.registry.empty()) {
      fail(Errc::kNotConfigured, "no registry configured; run `bricks configure --registry <url>`");
    }
    base = config.registry;
  }
  if (config.token.empty()) {
    fail(Errc::kAuthError, "no registry token configured");
  }
  ClientOptions options;
  options.parallel_fetches = config.parallel;
  return RegistryClient(RegistryEndpoint::make(*base, config.token), options);
}

// A URL-form ref names its registry: the URL minus the trailing /org/name.
std::optional<std::string> registry_of(const BrickRef& ref) {
  if (!ref.source_url) return std::nullopt;
  std::string url = *ref.source_url;
  if (url.ends_with(".git")) url.resize(url.size() - 4);
  auto suffix = "/" + ref.id();
  if (url.size() > suffix.size() && url.ends_with(suffix)) url.resize(url.size() - suffix.size());
  return url;
}

json reason_json(const StaleReason& r) {
  json j{{"kind", r.describe()}};
  if (!r.path.empty()) j["path"] = r.path;
  j["recorded"] = r.recorded ? json(r.recorded->str()) : json(nullptr);
  j["current"] = r.current ? json(r.current->str()) : json(nullptr);
  return j;
}

void print_plan(std::ostream& out, const std::vector<StageStatus>& plan, bool as_json) {
  if (as_json) {
    json arr = json::array();
    for (const auto& s : plan) {
      json reasons = json::array();
      for (const auto& r : s.reasons) reasons.push_back(reason_json(r));
      arr.push_back({{"stage", s.stage}, {"state", state_name(s.state)}, {"reasons", reasons}});
    }
    out << arr.dump(2) << "\n";
    return;
  }
  std::size_t width = 5;
  for (const auto& s : plan) width = std::max(width, s.stage.size());
  out << std::left << std::setw(static_cast<int>(width) + 2) << "STAGE" << std::setw(9)
      << "STATE" << "REASON\n";
  for (const auto& s : plan) {
    std::string reason = s.reasons.empty() ? "-" : s.reasons.front().describe();
    out << std::left << std::setw(static_cast<int>(width) + 2) << s.stage << std::setw(9)
        << state_name(s.state) << reason << "\n";
  }
}

std::string prompt(std::ostream& err, const std::string& label) {
  err << label << ": " << std::flush;
  std::string line;
  std::getline(std::cin, line);
  return line;
}

// ---------------------------------------------------------------------------

struct ConfigureArgs {
  bool check = false;
  bool show = false;
};

int cmd_configure(Context& ctx, const ConfigureArgs& args) {
  if (args.show) {
    ctx.out << config_of(ctx).describe();
    return kExitOk;
  }
  auto updates = ctx.flags;
  auto current = config_of(ctx);
  if (::isatty(STDIN_FILENO) && ctx.flags.empty()) {
    if (current.library.empty()) updates["library"] = prompt(ctx.err, "library directory");
    if (current.registry.empty()) updates["registry"] = prompt(ctx.err, "registry url");
    if (current.token.empty()) updates["token"] = prompt(ctx.err, "registry token");
  }
  if (auto it = updates.find("library"); it != updates.end()) {
    it->second = fs::absolute(it->second).lexically_normal().string();
  }
  auto path = config_path(ctx.env);
  bool changed = update_config_file(path, updates);
  ctx.err << (changed ? "wrote " : "unchanged ") << path.string() << "\n";

  auto config = config_of(ctx);
  if (!config.library.empty()) {
    auto lib = library_of(config);
    std::error_code ec;
    fs::create_directories(lib.cache(), ec);
    if (ec) fail(Errc::kIoError, "cannot create " + lib.cache().string() + ": " + ec.message());
  }
  if (args.check) {
    client_of(config).ping();
    ctx.err << "registry " << config.registry << " accepted the token\n";
  }
  return kExitOk;
}

int cmd_install(Context& ctx, const std::string& text, bool copy) {
  auto config = config_of(ctx);
  auto ref = parse_brick_ref(text, config.default_org);
  auto lib = library_of(config);
  auto client = client_of(config, registry_of(ref));
  InstallHooks hooks;
  hooks.log = [&](const std::string& line) { ctx.err << line << "\n"; };
  hooks.link_mode = copy ? LinkMode::kCopy : LinkMode::kSymlink;
  auto result = install(lib, client, ref, hooks);
  if (result.already_installed) {
    ctx.out << "already installed " << result.ref.id() << "@" << result.ref.commit << "\n";
  } else {
    ctx.out << result.summary() << "\n";
  }
  return kExitOk;
}

int cmd_assets(Context& ctx, const std::string& text, bool as_json) {
  auto config = config_of(ctx);
  auto ref = parse_brick_ref(text, config.default_org);
  auto lib = library_of(config);
  auto dir = find_installed(lib, ref);
  auto catalog = assets(lib, ref);
  if (as_json) {
    json arr = json::array();
    for (const auto& a : catalog.entries) {
      arr.push_back({{"name", a.name},
                     {"path", a.path.string()},
                     {"format", format_name(a.format)},
                     {"lock_path", a.lock_path},
                     {"hash", a.hash.str()}});
    }
    json doc{{"brick", ref.id()},
             {"commit", dir.filename().string()},
             {"path", dir.string()},
             {"assets", arr}};
    ctx.out << doc.dump(2) << "\n";
    return kExitOk;
  }
  for (const auto& a : catalog.entries) {
    ctx.out << a.name << "\t" << a.path.string() << "\t" << format_name(a.format) << "\n";
  }
  return kExitOk;
}

int cmd_init(Context& ctx) {
  deps_init(ctx.workdir);
  ctx.err << "initialized " << dependencies_path(ctx.workdir).string() << "\n";
  return kExitOk;
}

int cmd_add(Context& ctx, const std::string& text) {
  auto config = config_of(ctx);
  auto ref = parse_brick_ref(text, config.default_org);
  auto client = client_of(config, registry_of(ref));
  auto result = deps_add(ctx.workdir, client, ref);
  ctx.out << (result.updated ? "updated " : "added ") << result.entry.ref.id() << " "
          << result.entry.ref.commit << "\n";
  return kExitOk;
}

int cmd_pull(Context& ctx) {
  auto config = config_of(ctx);
  auto lib = library_of(config);
  auto client = client_of(config);
  InstallHooks hooks;
  hooks.log = [&](const std::string& line) { ctx.err << line << "\n"; };
  auto report = deps_pull(ctx.workdir, lib, client, hooks);
  int code = kExitOk;
  for (const auto& e : report.entries) {
    auto id = e.ref.id() + "@" + e.ref.commit;
    switch (e.status) {
      case PullEntry::Status::kInstalled: ctx.out << "installed " << id << "\n"; break;
      case PullEntry::Status::kPresent: ctx.out << "present " << id << "\n"; break;
      case PullEntry::Status::kFailed:
        ctx.err << "error: " << id << ": " << e.error->what() << "\n";
        code = std::max(code, exit_code_for(e.error->code()));
        break;
    }
  }
  ctx.err << report.installed() << " of " << report.entries.size() << " dependencies installed\n";
  return code;
}

struct ReproArgs {
  bool dry_run = false;
  bool json = false;
  int jobs = 1;
  bool quiet = false;
};

int cmd_repro(Context& ctx, const ReproArgs& args) {
  auto manifest = load_manifest(ctx.workdir);
  auto lock = load_lockfile(ctx.workdir);
  if (args.dry_run) {
    print_plan(ctx.out, plan(ctx.workdir, manifest, lock), args.json);
    return kExitOk;
  }
  ReproOptions options;
  options.jobs = args.jobs;
  options.log = [&](const std::string& line) { ctx.err << line << "\n"; };
  if (!args.quiet) options.echo = [&](std::string_view chunk) { ctx.err << chunk; };
  auto report = repro(ctx.workdir, manifest, lock, options);
  if (args.json) {
    json runs = json::array();
    for (const auto& r : report.runs) {
      runs.push_back({{"stage", r.stage}, {"exit_code", r.exit_code}, {"wall_ms", r.wall.count()}});
    }
    ctx.out << json{{"executed", report.executed},
                    {"skipped", report.skipped},
                    {"failed", report.failed},
                    {"runs", runs}}
                   .dump(2)
            << "\n";
  } else {
    ctx.out << "executed " << report.executed.size() << ", skipped " << report.skipped.size()
            << ", failed " << report.failed.size() << "\n";
  }
  if (!report.ok()) fail(Errc::kStageFailed, report.failure);
  return kExitOk;
}

int cmd_status(Context& ctx, bool as_json) {
  auto manifest = load_manifest(ctx.workdir);
  print_plan(ctx.out, plan(ctx.workdir, manifest, load_lockfile(ctx.workdir)), as_json);
  return kExitOk;
}

struct PushArgs {
  std::string org;
  std::string name;
  std::string commit_id;
  std::string branch{kMainBranch};
};

int cmd_push(Context& ctx, const PushArgs& args) {
  auto config = config_of(ctx);
  auto org = args.org.empty() ? config.default_org : args.org;
  auto name = args.name.empty() ? fs::absolute(ctx.workdir).lexically_normal().filename().string()
                                : args.name;
  if (name.empty()) {
    name = fs::absolute(ctx.workdir).lexically_normal().parent_path().filename().string();
  }
  if (!is_identifier(org) || !is_identifier(name)) {
    fail(Errc::kUsageError, "illegal brick name '" + org + "/" + name + "'");
  }
  auto manifest = load_manifest(ctx.workdir);
  auto lock = load_lockfile(ctx.workdir);
  if (!lock) fail(Errc::kSyntaxError, "no brick.lock; run `bricks repro` first");
  auto lib = library_of(config);
  auto client = client_of(config);
  ContentStore store(lib.cache());
  commit_outputs(ctx.workdir, *lock, store);
  PushOptions options;
  if (!args.commit_id.empty()) options.commit_id = args.commit_id;
  options.branch = args.branch;
  auto archive = pack_snapshot(ctx.workdir, manifest);
  auto result = client.push_brick(org, name, archive, *lock, store, options);
  ctx.out << (result.created ? "pushed " : "unchanged ") << org << "/" << name << "@"
          << result.commit << " (" << result.blobs_uploaded << " blobs uploaded)\n";
  return kExitOk;
}

int cmd_cache_verify(Context& ctx) {
  auto lib = library_of(config_of(ctx));
  ContentStore store(lib.cache());
  auto report = store.verify();
  for (const auto& p : report.corrupt) ctx.err << "corrupt: " << p.string() << "\n";
  for (const auto& p : report.stray) ctx.err << "stray: " << p.string() << "\n";
  ctx.out << "checked " << report.checked << " blobs, " << report.corrupt.size() << " corrupt, "
          << report.stray.size() << " stray\n";
  if (!report.ok()) fail(Errc::kCorruptCache, "cache verification failed");
  return kExitOk;
}

int cmd_cache_gc(Context& ctx, bool dry_run) {
  if (!dry_run) fail(Errc::kUsageError, "cache gc only lists unreferenced blobs; pass --dry-run");
  auto lib = library_of(config_of(ctx));
  auto unused = unreferenced_blobs(lib);
  for (const auto& d : unused) ctx.out << d << "\n";
  ctx.err << unused.size() << " unreferenced blobs\n";
  return kExitOk;
}

void print_error(std::ostream& err, const Error& e) {
  err << "error: " << e.what() << "\n";
  switch (e.code()) {
    case Errc::kAuthError:
      err << "hint: run `bricks configure --token <token> --check` to set a valid registry token\n";
      break;
    case Errc::kNotConfigured:
      err << "hint: run `bricks configure` to set the library, registry and token\n";
      break;
    default: break;
  }
}

}  // namespace

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::kAuthError: return kExitAuth;
    case Errc::kMalformedRef:
    case Errc::kSyntaxError:
    case Errc::kCycleError:
    case Errc::kDuplicateOutput:
    case Errc::kBadHash:
    case Errc::kDuplicateEntry:
    case Errc::kUnpinnedEntry:
    case Errc::kNotConfigured:
    case Errc::kUsageError:
      return kExitUsage;
    case Errc::kIoError:
    case Errc::kCorruptCache:
    case Errc::kMissingBlob:
    case Errc::kNotFound:
    case Errc::kNetworkError:
    case Errc::kIntegrityError:
    case Errc::kAmbiguousPrefix:
    case Errc::kConflictError:
    case Errc::kAssetNameCollision:
    case Errc::kNotInstalled:
    case Errc::kStageFailed:
    case Errc::kHashMismatch:
      return kExitFailure;
  }
  return kExitFailure;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const Environment& env) {
  CLI::App app{"Versioned data packages: install, build and publish bricks.", "bricks"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string chdir;
  app.add_option("-C", chdir, "Run as if started in this directory");
  std::string library, registry, token;
  int parallel = 0;
  app.add_option("--library", library, "Library directory");
  app.add_option("--registry", registry, "Registry base URL");
  app.add_option("--token", token, "Registry bearer token");
  app.add_option("--parallel", parallel, "Parallel blob downloads")->check(CLI::PositiveNumber);

  ConfigureArgs configure_args;
  auto* configure = app.add_subcommand("configure", "Write the client configuration");
  configure->add_option("--library", library, "Library directory");
  configure->add_option("--registry", registry, "Registry base URL");
  configure->add_option("--token", token, "Registry bearer token");
  configure->add_option("--parallel", parallel, "Parallel blob downloads")
      ->check(CLI::PositiveNumber);
  configure->add_flag("--check", configure_args.check, "Validate the token against the registry");
  configure->add_flag("--show", configure_args.show, "Print the effective configuration");

  std::string ref_text;
  bool copy = false;
  auto* install_cmd = app.add_subcommand("install", "Install a brick into the library");
  install_cmd->add_option("ref", ref_text, "[org/]name[@commit] or URL")->required();
  install_cmd->add_flag("--copy", copy, "Copy files instead of linking into the cache");

  bool as_json = false;
  auto* assets_cmd = app.add_subcommand("assets", "List the assets of an installed brick");
  assets_cmd->add_option("ref", ref_text, "[org/]name[@commit]")->required();
  assets_cmd->add_flag("--json", as_json, "JSON output");

  auto* init_cmd = app.add_subcommand("init", "Create .bb/dependencies.txt");
  auto* add_cmd = app.add_subcommand("add", "Pin a brick as a dependency");
  add_cmd->add_option("ref", ref_text, "[org/]name[@commit] or URL")->required();
  auto* pull_cmd = app.add_subcommand("pull", "Install every pinned dependency");

  ReproArgs repro_args;
  auto* repro_cmd = app.add_subcommand("repro", "Run stale pipeline stages");
  repro_cmd->add_flag("--dry-run", repro_args.dry_run, "Print the plan only");
  repro_cmd->add_flag("--json", repro_args.json, "JSON output");
  repro_cmd->add_flag("-q,--quiet", repro_args.quiet, "Do not echo stage output");
  repro_cmd->add_option("-j,--jobs", repro_args.jobs, "Stages to run concurrently")
      ->check(CLI::PositiveNumber);

  PushArgs push_args;
  auto* push_cmd = app.add_subcommand("push", "Publish the brick in the working directory");
  push_cmd->add_option("--org", push_args.org, "Organization");
  push_cmd->add_option("--name", push_args.name, "Brick name (default: directory name)");
  push_cmd->add_option("--commit-id", push_args.commit_id, "Explicit 40-hex commit id");
  push_cmd->add_option("--branch", push_args.branch, "Branch");

  auto* status_cmd = app.add_subcommand("status", "Show the pipeline plan");
  status_cmd->add_flag("--json", as_json, "JSON output");

  bool dry_run = false;
  auto* cache_cmd = app.add_subcommand("cache", "Cache maintenance");
  cache_cmd->require_subcommand(1);
  auto* verify_cmd = cache_cmd->add_subcommand("verify", "Re-hash every cached blob");
  auto* gc_cmd = cache_cmd->add_subcommand("gc", "List blobs no installed brick uses");
  gc_cmd->add_flag("--dry-run", dry_run, "List only");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  Context ctx{out, err, env, fs::current_path(), {}};
  try {
    if (!chdir.empty()) ctx.workdir = fs::absolute(chdir);
    if (!library.empty()) ctx.flags["library"] = library;
    if (!registry.empty()) ctx.flags["registry"] = registry;
    if (!token.empty()) ctx.flags["token"] = token;
    if (parallel > 0) ctx.flags["parallel"] = std::to_string(parallel);

    if (configure->parsed()) return cmd_configure(ctx, configure_args);
    if (install_cmd->parsed()) return cmd_install(ctx, ref_text, copy);
    if (assets_cmd->parsed()) return cmd_assets(ctx, ref_text, as_json);
    if (init_cmd->parsed()) return cmd_init(ctx);
    if (add_cmd->parsed()) return cmd_add(ctx, ref_text);
    if (pull_cmd->parsed()) return cmd_pull(ctx);
    if (repro_cmd->parsed()) return cmd_repro(ctx, repro_args);
    if (push_cmd->parsed()) return cmd_push(ctx, push_args);
    if (status_cmd->parsed()) return cmd_status(ctx, as_json);
    if (verify_cmd->parsed()) return cmd_cache_verify(ctx);
    if (gc_cmd->parsed()) return cmd_cache_gc(ctx, dry_run);
  } catch (const Error& e) {
    print_error(err, e);
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace bricks
