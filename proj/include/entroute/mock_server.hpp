#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

namespace httplib {
class Server;
}

namespace entroute {

/// Scripted behaviour for prompts containing `match` (first matching rule wins;
/// an empty match catches everything).
struct MockRule {
  std::string match;
  /// Next-token distributions, cycled when the completion is longer. Each is sorted
  /// descending and the first entry is the emitted token.
  std::vector<std::vector<double>> distributions{{0.25, 0.25, 0.25, 0.25}};
  std::size_t length = 256;  // natural completion length before end-of-sequence
};

struct MockScript {
  std::vector<MockRule> rules;
  bool supports_logprobs = true;
  std::size_t fail_first_n = 0;  // per distinct prompt, answer the first n requests with fail_status
  int fail_status = 503;

  /// {"rules": [{"match": "...", "distributions": [[...]], "uniform": [k, ...], "length": n}],
  ///  "supports_logprobs": true, "fail_first_n": 0, "fail_status": 503}
  /// "uniform" is shorthand for uniform-over-k distributions.
  [[nodiscard]] static MockScript from_json(const nlohmann::json& j);
  [[nodiscard]] static MockScript load(const std::filesystem::path& path);

  [[nodiscard]] const MockRule& rule_for(const std::string& prompt) const;
};

/// Deterministic OpenAI-compatible endpoint (completions and chat) for tests and demos.
class MockServer {
 public:
  explicit MockServer(MockScript script);
  ~MockServer();
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  /// Binds to host:port (port 0 picks a free one) and serves on a background thread.
  void start(const std::string& host = "127.0.0.1", int port = 0);
  void stop();
  /// Serves on the calling thread until stop() is called from elsewhere.
  void listen_blocking(const std::string& host, int port);

  [[nodiscard]] int port() const noexcept { return port_; }
  [[nodiscard]] std::string url() const;
  /// Request bodies in arrival order.
  [[nodiscard]] std::vector<nlohmann::json> requests() const;

  /// The response body for a request, without HTTP. Exposed for tests.
  [[nodiscard]] nlohmann::json respond(const nlohmann::json& request, bool chat) const;

 private:
  void install_routes();

  MockScript script_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
  std::string host_ = "127.0.0.1";
  mutable std::mutex mutex_;
  std::vector<nlohmann::json> requests_;
  std::map<std::string, std::size_t> failures_;
};

}  // namespace entroute
