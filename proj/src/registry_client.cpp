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

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>

#include "bricks/error.hpp"
#include "bricks/registry.hpp"
#include "bricks/tar.hpp"

namespace bricks {

namespace {

using json = nlohmann::json;

// The message never includes request headers, so the token cannot leak.
[[noreturn]] void throw_status(int status, const std::string& what, const std::string& body) {
  std::string detail;
  try {
    auto j = json::parse(body);
    if (j.contains("error")) detail = j["error"].get<std::string>();
  } catch (const json::exception&) {
  }
  auto msg = what + ": HTTP " + std::to_string(status) + (detail.empty() ? "" : " (" + detail + ")");
  switch (status) {
    case 401:
    case 403:
      fail(Errc::kAuthError, what + ": registry rejected the access token");
    case 404: fail(Errc::kNotFound, msg);
    case 409: fail(Errc::kConflictError, msg);
    case 422: fail(Errc::kMissingBlob, msg);
    default: fail(Errc::kNetworkError, msg);
  }
}

void check_md5_header(const httplib::Result& res, std::string_view body, const std::string& what) {
  if (!res->has_header(std::string(kContentMd5Header))) {
    fail(Errc::kIntegrityError, what + ": response lacks " + std::string(kContentMd5Header));
  }
  if (hash_bytes(body).digest() != res->get_header_value(std::string(kContentMd5Header))) {
    fail(Errc::kIntegrityError, what + ": body does not match its digest header");
  }
}

std::string json_str(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string()) {
    fail(Errc::kNetworkError, std::string("malformed registry response: missing ") + key);
  }
  return j[key].get<std::string>();
}

}  // namespace

RegistryEndpoint RegistryEndpoint::make(std::string base_url, std::string token) {
  while (base_url.ends_with('/')) base_url.pop_back();
  return RegistryEndpoint{std::move(base_url), std::move(token)};
}

std::string commits_to_json(const std::vector<CommitInfo>& commits) {
  json arr = json::array();
  for (const auto& c : commits) {
    arr.push_back({{"commit", c.commit},
                   {"branch", c.branch},
                   {"timestamp", c.timestamp},
                   {"head", c.is_head_of_main}});
  }
  return arr.dump();
}

std::vector<CommitInfo> commits_from_json(std::string_view text) {
  std::vector<CommitInfo> out;
  try {
    auto arr = json::parse(text);
    if (!arr.is_array()) fail(Errc::kNetworkError, "malformed commit list");
    for (const auto& j : arr) {
      CommitInfo c;
      c.commit = json_str(j, "commit");
      c.branch = json_str(j, "branch");
      c.timestamp = j.value("timestamp", std::int64_t{0});
      c.is_head_of_main = j.value("head", false);
      if (c.commit.size() != kFullCommitLength || !is_hex(c.commit)) {
        fail(Errc::kNetworkError, "malformed commit id in registry response");
      }
      out.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    fail(Errc::kNetworkError, std::string("malformed commit list: ") + e.what());
  }
  return out;
}

std::string select_commit(const std::vector<CommitInfo>& commits, const BrickRef& ref) {
  if (ref.is_latest()) {
    for (const auto& c : commits) {
      if (c.is_head_of_main) return c.commit;
    }
    fail(Errc::kNotFound, ref.id() + " has no commit on the main branch");
  }
  std::vector<std::string> matches;
  for (const auto& c : commits) {
    if (c.commit.starts_with(ref.commit) &&
        std::find(matches.begin(), matches.end(), c.commit) == matches.end()) {
      matches.push_back(c.commit);
    }
  }
  if (matches.empty()) fail(Errc::kNotFound, ref.id() + " has no commit matching " + ref.commit);
  if (matches.size() > 1) {
    fail(Errc::kAmbiguousPrefix, ref.id() + "@" + ref.commit + " matches " +
                                     std::to_string(matches.size()) + " commits");
  }
  return matches.front();
}

std::vector<ContentHash> payload_blobs(const Lockfile& lock, const ContentStore& store) {
  std::vector<ContentHash> out;
  for (const auto& e : payload_outs(lock)) {
    for (auto& h : store.closure(e.hash)) {
      if (std::find(out.begin(), out.end(), h) == out.end()) out.push_back(std::move(h));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

RegistryClient::RegistryClient(RegistryEndpoint endpoint, ClientOptions options)
    : endpoint_(RegistryEndpoint::make(std::move(endpoint.base_url), std::move(endpoint.token))),
      options_(options) {
  const auto& url = endpoint_.base_url;
  auto scheme = url.find("://");
  if (scheme == std::string::npos) fail(Errc::kUsageError, "registry URL needs a scheme: " + url);
  if (url.substr(0, scheme) != "http") {
    fail(Errc::kUsageError, "unsupported registry scheme in " + url + " (only http)");
  }
  auto path = url.find('/', scheme + 3);
  scheme_host_ = url.substr(0, path);
  path_prefix_ = path == std::string::npos ? "" : url.substr(path);
}

template <typename Fn>
auto RegistryClient::with_retry(Fn&& fn) -> decltype(fn()) {
  auto delay = options_.backoff;
  for (int attempt = 0;; ++attempt) {
    try {
      return fn();
    } catch (const Error& e) {
      if (e.code() != Errc::kNetworkError || attempt >= options_.retries) throw;
    }
    std::this_thread::sleep_for(delay);
    delay *= 2;
  }
}

namespace {

struct Http {
  httplib::Client cli;
  httplib::Headers headers;

  Http(const std::string& scheme_host, const RegistryEndpoint& ep, std::chrono::seconds timeout)
      : cli(scheme_host) {
    cli.set_connection_timeout(timeout);
    cli.set_read_timeout(timeout);
    cli.set_write_timeout(timeout);
    if (!ep.token.empty()) headers.emplace("Authorization", "Bearer " + ep.token);
  }
};

void check_transport(const httplib::Result& res, const std::string& what) {
  if (!res) {
    fail(Errc::kNetworkError, what + ": " + httplib::to_string(res.error()));
  }
}

}  // namespace

void RegistryClient::ping() {
  with_retry([&] {
    Http http(scheme_host_, endpoint_, options_.timeout);
    ++stats_.requests;
    auto res = http.cli.Get(path_prefix_ + "/api/ping", http.headers);
    check_transport(res, "ping");
    if (res->status != 200) throw_status(res->status, "ping", res->body);
  });
}

std::vector<CommitInfo> RegistryClient::list_commits(std::string_view org, std::string_view name) {
  auto what = "list commits of " + std::string(org) + "/" + std::string(name);
  return with_retry([&] {
    Http http(scheme_host_, endpoint_, options_.timeout);
    ++stats_.requests;
    auto res = http.cli.Get(
        path_prefix_ + "/api/" + std::string(org) + "/" + std::string(name) + "/commits",
        http.headers);
    check_transport(res, what);
    if (res->status != 200) throw_status(res->status, what, res->body);
    return commits_from_json(res->body);
  });
}

std::string RegistryClient::resolve_commit(const BrickRef& ref) {
  return select_commit(list_commits(ref.org, ref.name), ref);
}

std::string RegistryClient::fetch_snapshot_archive(std::string_view org, std::string_view name,
                                                   std::string_view commit) {
  auto what = "snapshot of " + std::string(org) + "/" + std::string(name) + "@" + std::string(commit);
  return with_retry([&] {
    Http http(scheme_host_, endpoint_, options_.timeout);
    ++stats_.requests;
    auto res = http.cli.Get(path_prefix_ + "/api/" + std::string(org) + "/" + std::string(name) +
                                "/" + std::string(commit) + "/snapshot.tar",
                            http.headers);
    check_transport(res, what);
    if (res->status != 200) throw_status(res->status, what, res->body);
    check_md5_header(res, res->body, what);
    ++stats_.snapshot_fetches;
    stats_.snapshot_bytes += res->body.size();
    return std::move(res->body);
  });
}

std::uint64_t RegistryClient::fetch_snapshot(std::string_view org, std::string_view name,
                                             std::string_view commit,
                                             const std::filesystem::path& dest) {
  auto archive = fetch_snapshot_archive(org, name, commit);
  tar::unpack(archive, dest);
  return archive.size();
}

std::string RegistryClient::fetch_lock(std::string_view org, std::string_view name,
                                       std::string_view commit) {
  auto what = "lock of " + std::string(org) + "/" + std::string(name) + "@" + std::string(commit);
  return with_retry([&] {
    Http http(scheme_host_, endpoint_, options_.timeout);
    ++stats_.requests;
    auto res = http.cli.Get(path_prefix_ + "/api/" + std::string(org) + "/" + std::string(name) +
                                "/" + std::string(commit) + "/lock",
                            http.headers);
    check_transport(res, what);
    if (res->status != 200) throw_status(res->status, what, res->body);
    check_md5_header(res, res->body, what);
    return std::move(res->body);
  });
}

std::uint64_t RegistryClient::fetch_blob(const ContentHash& hash, const Sink& sink) {
  auto what = "blob " + hash.digest();
  Http http(scheme_host_, endpoint_, options_.timeout);
  ++stats_.requests;
  int status = 0;
  std::string error_body;
  Md5 md5;
  std::uint64_t received = 0;
  auto res = http.cli.Get(
      path_prefix_ + "/blobs/" + hash.digest(), http.headers,
      [&](const httplib::Response& r) {
        status = r.status;
        return true;
      },
      [&](const char* data, size_t len) {
        std::string_view chunk(data, len);
        if (status != 200) {
          error_body.append(chunk);
          return true;
        }
        md5.update(chunk);
        received += len;
        sink(chunk);
        return true;
      });
  if (!res) {
    // A body cut short by the peer still proves nothing about the digest.
    if (status == 200 && res.error() == httplib::Error::Read) {
      fail(Errc::kIntegrityError, what + ": transfer truncated after " + std::to_string(received) +
                                      " bytes");
    }
    fail(Errc::kNetworkError, what + ": " + httplib::to_string(res.error()));
  }
  if (res->status != 200) throw_status(res->status, what, error_body.empty() ? res->body : error_body);
  if (md5.finish() != hash.digest()) {
    fail(Errc::kIntegrityError, what + ": received bytes do not match the digest");
  }
  ++stats_.blob_fetches;
  stats_.blob_bytes += received;
  return received;
}

void RegistryClient::fetch_blob_into(ContentStore& store, const ContentHash& hash) {
  with_retry([&] {
    auto writer = store.writer();
    fetch_blob(hash, [&](std::string_view chunk) { writer.write(chunk); });
    writer.commit(ContentHash(hash.digest(), false));
  });
}

void RegistryClient::fetch_blobs(ContentStore& store, std::span<const ContentHash> hashes) {
  if (hashes.empty()) return;
  std::size_t workers = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::max(1, options_.parallel_fetches)), 1, hashes.size());
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr first_error;
  auto work = [&] {
    for (;;) {
      auto i = next.fetch_add(1);
      if (i >= hashes.size()) return;
      {
        std::lock_guard lock(mu);
        if (first_error) return;
      }
      try {
        fetch_blob_into(store, hashes[i]);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t i = 1; i < workers; ++i) threads.emplace_back(work);
  work();
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

bool RegistryClient::has_blob(const ContentHash& hash) {
  auto what = "blob " + hash.digest();
  return with_retry([&] {
    Http http(scheme_host_, endpoint_, options_.timeout);
    ++stats_.requests;
    auto res = http.cli.Head(path_prefix_ + "/blobs/" + hash.digest(), http.headers);
    check_transport(res, what);
    if (res->status == 200) return true;
    if (res->status == 404) return false;
    throw_status(res->status, what, res->body);
  });
}

void RegistryClient::upload_blob(const ContentStore& store, const ContentHash& hash) {
  auto what = "upload blob " + hash.digest();
  auto body = store.read_blob(hash);
  with_retry([&] {
    Http http(scheme_host_, endpoint_, options_.timeout);
    ++stats_.requests;
    auto res = http.cli.Put(path_prefix_ + "/blobs/" + hash.digest(), http.headers, body,
                            "application/octet-stream");
    check_transport(res, what);
    if (res->status != 200 && res->status != 201) throw_status(res->status, what, res->body);
    ++stats_.blob_uploads;
  });
}

PushResult RegistryClient::push_brick(std::string_view org, std::string_view name,
                                      const std::string& archive, const Lockfile& lock,
                                      const ContentStore& store, const PushOptions& options) {
  PushResult result;
  for (const auto& hash : payload_blobs(lock, store)) {
    if (!store.contains(hash)) {
      fail(Errc::kMissingBlob, "blob " + hash.str() + " is not in the local cache; run repro first");
    }
    if (!has_blob(hash)) {
      upload_blob(store, hash);
      ++result.blobs_uploaded;
    }
  }
  auto what = "push " + std::string(org) + "/" + std::string(name);
  auto [commit, created] = with_retry([&] {
    Http http(scheme_host_, endpoint_, options_.timeout);
    http.headers.emplace(std::string(kBranchHeader), options.branch);
    if (options.commit_id) http.headers.emplace(std::string(kCommitIdHeader), *options.commit_id);
    ++stats_.requests;
    auto res = http.cli.Post(
        path_prefix_ + "/api/" + std::string(org) + "/" + std::string(name) + "/commits",
        http.headers, archive, "application/x-tar");
    check_transport(res, what);
    if (res->status != 200 && res->status != 201) throw_status(res->status, what, res->body);
    try {
      auto j = json::parse(res->body);
      return std::pair{json_str(j, "commit"), j.value("created", false)};
    } catch (const json::exception& e) {
      fail(Errc::kNetworkError, what + ": malformed response");
    }
  });
  result.commit = std::move(commit);
  result.created = created;
  return result;
}

}  // namespace bricks
