#include "entroute/mock_server.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "entroute/errors.hpp"
#include "httplib.h"

namespace entroute {

using json = nlohmann::json;

MockScript MockScript::from_json(const json& j) {
  MockScript s;
  try {
    s.supports_logprobs = j.value("supports_logprobs", true);
    s.fail_first_n = j.value("fail_first_n", std::size_t{0});
    s.fail_status = j.value("fail_status", 503);
    for (const auto& r : j.value("rules", json::array())) {
      MockRule rule;
      rule.match = r.value("match", std::string());
      rule.length = r.value("length", rule.length);
      if (r.contains("uniform")) {
        rule.distributions.clear();
        for (const auto& k : r["uniform"]) {
          const auto n = k.get<std::size_t>();
          if (n == 0) throw ValidationError("uniform support must be >= 1");
          rule.distributions.emplace_back(n, 1.0 / static_cast<double>(n));
        }
      } else if (r.contains("distributions")) {
        rule.distributions = r["distributions"].get<std::vector<std::vector<double>>>();
      }
      if (rule.distributions.empty()) throw ValidationError("mock rule '" + rule.match + "' has no distributions");
      for (const auto& d : rule.distributions) {
        if (d.empty()) throw ValidationError("mock rule '" + rule.match + "' has an empty distribution");
      }
      s.rules.push_back(std::move(rule));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("invalid mock script: ") + e.what());
  }
  return s;
}

MockScript MockScript::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  try {
    return from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw ParseError(path.string(), 0, e.what());
  }
}

const MockRule& MockScript::rule_for(const std::string& prompt) const {
  static const MockRule fallback{};
  for (const auto& r : rules) {
    if (prompt.find(r.match) != std::string::npos) return r;
  }
  return fallback;
}

namespace {

std::string prompt_of(const json& request, bool chat) {
  if (!chat) return request.at("prompt").get<std::string>();
  std::string out;
  for (const auto& m : request.at("messages")) {
    if (!out.empty()) out += '\n';
    out += m.at("content").get<std::string>();
  }
  return out;
}

std::string token_text(std::size_t step, std::size_t candidate) {
  if (candidate == 0) return " t" + std::to_string(step);
  return " alt" + std::to_string(step) + "_" + std::to_string(candidate);
}

std::size_t word_count(const std::string& s) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : s) {
    const bool space = c == ' ' || c == '\n' || c == '\t';
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

}  // namespace

MockServer::MockServer(MockScript script) : script_(std::move(script)) {}

MockServer::~MockServer() { stop(); }

json MockServer::respond(const json& request, bool chat) const {
  const std::string prompt = prompt_of(request, chat);
  const MockRule& rule = script_.rule_for(prompt);
  const auto max_tokens = request.value("max_tokens", std::size_t{16});
  const std::size_t n = std::min(max_tokens, rule.length);

  std::size_t top_k = 0;
  if (chat) {
    if (request.value("logprobs", false)) top_k = request.value("top_logprobs", std::size_t{1});
  } else if (request.contains("logprobs") && request["logprobs"].is_number_integer()) {
    top_k = request["logprobs"].get<std::size_t>();
  }
  const bool want_logprobs = chat ? request.value("logprobs", false) : request.contains("logprobs");

  std::string text;
  json steps = json::array();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& dist = rule.distributions[i % rule.distributions.size()];
    text += token_text(i, 0);
    const std::size_t keep = std::min(std::max<std::size_t>(top_k, 1), dist.size());
    if (chat) {
      json top = json::array();
      for (std::size_t c = 0; c < keep; ++c) {
        if (dist[c] > 0.0) top.push_back({{"token", token_text(i, c)}, {"logprob", std::log(dist[c])}});
      }
      steps.push_back({{"token", token_text(i, 0)}, {"logprob", std::log(dist[0])}, {"top_logprobs", top}});
    } else {
      json top = json::object();
      for (std::size_t c = 0; c < keep; ++c) {
        if (dist[c] > 0.0) top[token_text(i, c)] = std::log(dist[c]);
      }
      steps.push_back(top);
    }
  }

  json choice{{"index", 0}, {"finish_reason", rule.length <= max_tokens ? "stop" : "length"}};
  if (chat) {
    choice["message"] = {{"role", "assistant"}, {"content", text}};
  } else {
    choice["text"] = text;
  }
  if (want_logprobs && script_.supports_logprobs) {
    choice["logprobs"] = chat ? json{{"content", steps}} : json{{"top_logprobs", steps}};
  } else {
    choice["logprobs"] = nullptr;
  }

  const std::size_t prompt_tokens = word_count(prompt);
  return json{{"id", "mock-0"},
              {"object", chat ? "chat.completion" : "text_completion"},
              {"model", request.value("model", std::string("mock"))},
              {"choices", json::array({choice})},
              {"usage",
               {{"prompt_tokens", prompt_tokens},
                {"completion_tokens", n},
                {"total_tokens", prompt_tokens + n}}}};
}

void MockServer::install_routes() {
  auto handler = [this](bool chat) {
    return [this, chat](const httplib::Request& req, httplib::Response& res) {
      if (req.has_header("X-Request-Id")) res.set_header("X-Request-Id", req.get_header_value("X-Request-Id"));
      json body;
      try {
        body = json::parse(req.body);
        const std::string prompt = prompt_of(body, chat);
        {
          std::lock_guard lock(mutex_);
          requests_.push_back(body);
          std::size_t& failed = failures_[prompt];
          if (failed < script_.fail_first_n) {
            ++failed;
            res.status = script_.fail_status;
            res.set_content(R"({"error":"scripted failure"})", "application/json");
            return;
          }
        }
        res.set_content(respond(body, chat).dump(), "application/json");
      } catch (const json::exception& e) {
        res.status = 400;
        res.set_content(json{{"error", e.what()}}.dump(), "application/json");
      }
    };
  };
  server_->Post("/v1/completions", handler(false));
  server_->Post("/v1/chat/completions", handler(true));
}

void MockServer::start(const std::string& host, int port) {
  if (server_) throw StateError("mock server already started");
  server_ = std::make_unique<httplib::Server>();
  install_routes();
  host_ = host;
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
  } else {
    port_ = server_->bind_to_port(host, port) ? port : -1;
  }
  if (port_ <= 0) {
    server_.reset();
    throw Error("mock server cannot bind " + host + ":" + std::to_string(port));
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void MockServer::listen_blocking(const std::string& host, int port) {
  if (server_) throw StateError("mock server already started");
  server_ = std::make_unique<httplib::Server>();
  install_routes();
  host_ = host;
  port_ = port;
  if (!server_->listen(host, port)) throw Error("mock server cannot listen on " + host + ":" + std::to_string(port));
}

void MockServer::stop() {
  if (!server_) return;
  server_->stop();
  if (thread_.joinable()) thread_.join();
  server_.reset();
}

std::string MockServer::url() const { return "http://" + host_ + ":" + std::to_string(port_); }

std::vector<json> MockServer::requests() const {
  std::lock_guard lock(mutex_);
  return requests_;
}

}  // namespace entroute
