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

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "bricks/error.hpp"
#include "bricks/fsutil.hpp"
#include "bricks/registry.hpp"
#include "bricks/tar.hpp"

namespace bricks {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr std::string_view kIdent = R"(([A-Za-z0-9._-]+))";

void reply_error(httplib::Response& res, int status, const std::string& message) {
  res.status = status;
  res.set_content(json{{"error", message}}.dump(), "application/json");
}

int status_for(Errc code) {
  switch (code) {
    case Errc::kNotFound: return 404;
    case Errc::kConflictError: return 409;
    case Errc::kMissingBlob: return 422;
    case Errc::kIntegrityError:
    case Errc::kSyntaxError:
    case Errc::kBadHash:
    case Errc::kUsageError:
      return 400;
    default: return 500;
  }
}

bool token_matches(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  unsigned char diff = 0;
  for (std::size_t i = 0; i < a.size(); ++i) diff |= static_cast<unsigned char>(a[i] ^ b[i]);
  return diff == 0;
}

std::int64_t now_seconds() {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

void ServerStats::reset() {
  for (auto* c : {&requests, &unauthorized, &commit_lists, &snapshot_gets, &snapshot_bytes,
                  &lock_gets, &blob_gets, &blob_bytes, &blob_heads, &blob_puts, &pushes}) {
    c->store(0);
  }
}

struct RegistryServer::Impl {
  httplib::Server http;
  std::thread thread;
  mutable std::mutex ingest_mu;
};

RegistryServer::RegistryServer(ServerOptions options)
    : impl_(std::make_unique<Impl>()),
      options_(std::move(options)),
      blobs_(options_.storage / "blobs") {
  auto& svr = impl_->http;

  svr.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
    ++stats_.requests;
    auto auth = req.get_header_value("Authorization");
    constexpr std::string_view kBearer = "Bearer ";
    bool ok = false;
    if (std::string_view(auth).starts_with(kBearer)) {
      auto presented = std::string_view(auth).substr(kBearer.size());
      for (const auto& t : options_.tokens) ok = ok || token_matches(presented, t);
    }
    if (ok) return httplib::Server::HandlerResponse::Unhandled;
    ++stats_.unauthorized;
    res.set_header("WWW-Authenticate", "Bearer");
    reply_error(res, 401, "unauthorized");
    return httplib::Server::HandlerResponse::Handled;
  });

  svr.set_exception_handler([](const httplib::Request&, httplib::Response& res,
                               std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const Error& e) {
      reply_error(res, status_for(e.code()), e.what());
    } catch (const std::exception& e) {
      reply_error(res, 500, e.what());
    }
  });

  svr.Get("/api/ping", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"ok":true})", "application/json");
  });

  auto brick_prefix = "/api/" + std::string(kIdent) + "/" + std::string(kIdent);

  svr.Get(brick_prefix + "/commits", [this](const httplib::Request& req, httplib::Response& res) {
    ++stats_.commit_lists;
    auto list = commits(req.matches[1].str(), req.matches[2].str());
    if (list.empty()) return reply_error(res, 404, "unknown brick");
    res.set_content(commits_to_json(list), "application/json");
  });

  svr.Post(brick_prefix + "/commits", [this](const httplib::Request& req, httplib::Response& res) {
    ++stats_.pushes;
    PushOptions opts;
    if (req.has_header(std::string(kCommitIdHeader))) {
      opts.commit_id = req.get_header_value(std::string(kCommitIdHeader));
    }
    if (req.has_header(std::string(kBranchHeader))) {
      opts.branch = req.get_header_value(std::string(kBranchHeader));
    }
    auto result = ingest(req.matches[1].str(), req.matches[2].str(), req.body, opts);
    res.status = result.created ? 201 : 200;
    res.set_content(json{{"commit", result.commit}, {"created", result.created}}.dump(),
                    "application/json");
  });

  auto archive_path = [this](const httplib::Request& req) {
    return options_.storage / "bricks" / req.matches[1].str() / req.matches[2].str() /
           (req.matches[3].str() + ".tar");
  };

  svr.Get(brick_prefix + "/([0-9a-f]{40})/snapshot\\.tar",
          [this, archive_path](const httplib::Request& req, httplib::Response& res) {
            ++stats_.snapshot_gets;
            auto path = archive_path(req);
            if (!fs::exists(path)) return reply_error(res, 404, "unknown commit");
            auto body = fsutil::read_file(path);
            stats_.snapshot_bytes += body.size();
            res.set_header(std::string(kContentMd5Header), hash_bytes(body).digest());
            res.set_content(std::move(body), "application/x-tar");
          });

  svr.Get(brick_prefix + "/([0-9a-f]{40})/lock",
          [this, archive_path](const httplib::Request& req, httplib::Response& res) {
            ++stats_.lock_gets;
            auto path = archive_path(req);
            if (!fs::exists(path)) return reply_error(res, 404, "unknown commit");
            for (auto& e : tar::read(fsutil::read_file(path))) {
              if (e.path == "brick.lock") {
                res.set_header(std::string(kContentMd5Header), hash_bytes(e.data).digest());
                res.set_content(std::move(e.data), "text/yaml");
                return;
              }
            }
            reply_error(res, 404, "commit has no brick.lock");
          });

  svr.Get("/blobs/([0-9a-f]{32})", [this](const httplib::Request& req, httplib::Response& res) {
    ContentHash hash(req.matches[1].str(), false);
    if (req.method == "HEAD") {
      ++stats_.blob_heads;
    } else {
      ++stats_.blob_gets;
    }
    if (!blobs_.contains(hash)) return reply_error(res, 404, "unknown blob");
    auto path = blobs_.blob_path(hash);
    auto size = fs::file_size(path);
    res.set_header(std::string(kContentMd5Header), hash.digest());
    if (req.method == "HEAD") return;
    stats_.blob_bytes += size;
    auto in = std::make_shared<std::ifstream>(path, std::ios::binary);
    res.set_content_provider(
        size, "application/octet-stream",
        [in](size_t offset, size_t length, httplib::DataSink& sink) {
          std::string buf(std::min<size_t>(length, 1 << 16), '\0');
          in->seekg(static_cast<std::streamoff>(offset));
          in->read(buf.data(), static_cast<std::streamsize>(buf.size()));
          auto n = static_cast<size_t>(in->gcount());
          if (n == 0) return false;
          return sink.write(buf.data(), n);
        });
  });

  svr.Put("/blobs/([0-9a-f]{32})", [this](const httplib::Request& req, httplib::Response& res,
                                          const httplib::ContentReader& reader) {
    ++stats_.blob_puts;
    ContentHash expected(req.matches[1].str(), false);
    bool existed = blobs_.contains(expected);
    auto writer = blobs_.writer();
    reader([&](const char* data, size_t len) {
      writer.write(std::string_view(data, len));
      return true;
    });
    writer.commit(expected);
    res.status = existed ? 200 : 201;
    res.set_content(json{{"md5", expected.digest()}}.dump(), "application/json");
  });
}

RegistryServer::~RegistryServer() { stop(); }

int RegistryServer::start(const std::string& host, int port) {
  auto& svr = impl_->http;
  host_ = host;
  port_ = port == 0 ? svr.bind_to_any_port(host) : (svr.bind_to_port(host, port) ? port : -1);
  if (port_ < 0) fail(Errc::kIoError, "cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([&svr] { svr.listen_after_bind(); });
  svr.wait_until_ready();
  return port_;
}

bool RegistryServer::listen(const std::string& host, int port) {
  host_ = host;
  port_ = port;
  return impl_->http.listen(host, port);
}

void RegistryServer::stop() {
  if (!impl_) return;
  impl_->http.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::string RegistryServer::url() const {
  return "http://" + host_ + ":" + std::to_string(port_);
}

std::vector<CommitInfo> RegistryServer::commits(std::string_view org,
                                                std::string_view name) const {
  std::vector<CommitInfo> list;
  auto log = options_.storage / "bricks" / std::string(org) / std::string(name) / "commits";
  std::lock_guard lock(impl_->ingest_mu);
  if (!is_identifier(org) || !is_identifier(name) || !fs::exists(log)) return list;
  std::istringstream in(fsutil::read_file(log));
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    CommitInfo c;
    if (fields >> c.commit >> c.branch >> c.timestamp) list.push_back(std::move(c));
  }
  // The log is oldest-first; clients get newest-first.
  std::reverse(list.begin(), list.end());
  for (auto& c : list) {
    if (c.branch == kMainBranch) {
      c.is_head_of_main = true;
      break;
    }
  }
  return list;
}

PushResult RegistryServer::ingest(std::string_view org, std::string_view name,
                                  const std::string& archive, const PushOptions& options) {
  if (!is_identifier(org) || !is_identifier(name)) fail(Errc::kUsageError, "illegal brick name");
  if (!is_identifier(options.branch)) fail(Errc::kUsageError, "illegal branch name");

  std::optional<Lockfile> lock;
  for (const auto& e : tar::read(archive)) {
    if (e.path == "brick.lock") lock = parse_lockfile(e.data);
  }
  if (!lock) fail(Errc::kSyntaxError, "snapshot has no brick.lock");
  for (const auto& out : payload_outs(*lock)) {
    if (!blobs_.contains(out.hash)) {
      fail(Errc::kMissingBlob, "payload blob " + out.hash.str() + " (" + out.path + ") was not uploaded");
    }
    for (const auto& member : blobs_.closure(out.hash)) {
      if (!blobs_.contains(member)) {
        fail(Errc::kMissingBlob, "payload blob " + member.str() + " (in " + out.path + ") was not uploaded");
      }
    }
  }

  std::string commit = options.commit_id ? *options.commit_id : sha1_hex(archive);
  if (commit.size() != kFullCommitLength || !is_hex(commit)) {
    fail(Errc::kUsageError, "commit id must be 40 lowercase hex chars");
  }

  auto dir = options_.storage / "bricks" / std::string(org) / std::string(name);
  auto path = dir / (commit + ".tar");
  std::lock_guard lock_guard(impl_->ingest_mu);
  if (fs::exists(path)) {
    if (fsutil::read_file(path) != archive) {
      fail(Errc::kConflictError, "commit " + commit + " already exists with different content");
    }
    return PushResult{commit, false, 0};
  }
  fsutil::write_file_atomic(path, archive);
  std::ofstream log(dir / "commits", std::ios::app);
  log << commit << ' ' << options.branch << ' ' << now_seconds() << '\n';
  log.flush();
  if (!log) fail(Errc::kIoError, "cannot append commit log");
  return PushResult{commit, true, 0};
}

}  // namespace bricks
