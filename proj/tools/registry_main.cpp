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

// Standalone registry server.
//
//   bricks-registry --storage DIR --token T [--token T2] [--host H] [--port P]
//
// Tokens may also come from BRICKS_REGISTRY_TOKENS (comma separated).

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bricks/error.hpp"
#include "bricks/registry.hpp"

namespace {

bricks::RegistryServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bricks registry server", "bricks-registry"};
  std::string storage;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::vector<std::string> tokens;
  app.add_option("--storage", storage, "Storage directory")->required();
  app.add_option("--host", host, "Listen address");
  app.add_option("--port", port, "Listen port")->check(CLI::Range(0, 65535));
  app.add_option("--token", tokens, "Accepted bearer token (repeatable)");
  CLI11_PARSE(app, argc, argv);

  if (const char* env = std::getenv("BRICKS_REGISTRY_TOKENS")) {
    std::istringstream in(env);
    std::string t;
    while (std::getline(in, t, ',')) {
      if (!t.empty()) tokens.push_back(t);
    }
  }
  if (tokens.empty()) {
    std::cerr << "error: at least one --token is required\n";
    return 2;
  }

  try {
    bricks::RegistryServer server({storage, tokens});
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cerr << "listening on " << host << ":" << port << "\n";
    if (!server.listen(host, port)) {
      std::cerr << "error: cannot listen on " << host << ":" << port << "\n";
      return 1;
    }
  } catch (const bricks::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
