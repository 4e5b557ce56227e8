// seqroll-serve: HTTP decoding-assistant sessions.

#include <CLI11.hpp>

#include <csignal>
#include <iostream>
#include <random>

#include "http_service.hpp"

namespace {

httplib::Server* g_server = nullptr;

extern "C" void stop_server(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HTTP service for interactive decoding sessions"};
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string static_dir;
  std::string words;
  std::string snapshot;
  std::optional<std::uint64_t> seed;
  app.add_option("--host", host, "Bind address");
  app.add_option("--port", port, "Port")->check(CLI::Range(1, 65535));
  app.add_option("--static", static_dir, "Directory of UI assets served at /")->check(CLI::ExistingDirectory);
  app.add_option("--words", words, "Default wordle list for sessions that give none")->check(CLI::ExistingFile);
  app.add_option("--snapshot", snapshot, "Write all sessions to this file on shutdown");
  app.add_option("--seed", seed, "Seed for session ids (default: random)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    std::vector<std::string> default_words;
    if (!words.empty()) default_words = seqroll::read_code_file(words);
    seqroll::SessionStore store(seed ? *seed : std::random_device{}(), default_words);
    httplib::Server server;
    seqroll::service::install_routes(server, store, static_dir);
    g_server = &server;
    std::signal(SIGINT, stop_server);
    std::signal(SIGTERM, stop_server);
    std::cerr << "listening on http://" << host << ":" << port << "\n";
    if (!server.listen(host, port)) {
      std::cerr << "error: cannot listen on " << host << ":" << port << "\n";
      return 1;
    }
    if (!snapshot.empty()) store.snapshot(snapshot);
    return 0;
  } catch (const seqroll::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
