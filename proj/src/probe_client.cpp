#include "entroute/probe_client.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ostream>
#include <thread>

#include "entroute/errors.hpp"
#include "httplib.h"
#include "jsonl.hpp"

namespace entroute {

using detail::json;

std::string_view to_string(TaskKind k) noexcept { return k == TaskKind::Answer ? "answer" : "choice"; }

TaskKind parse_task_kind(std::string_view s) {
  if (s == "answer") return TaskKind::Answer;
  if (s == "choice") return TaskKind::Choice;
  throw ValidationError("unknown task kind '" + std::string(s) + "' (expected answer or choice)");
}

std::string_view to_string(Thinking t) noexcept {
  switch (t) {
    case Thinking::Unset: return "unset";
    case Thinking::On: return "on";
    case Thinking::Off: return "off";
  }
  return "unset";
}

Thinking parse_thinking(std::string_view s) {
  if (s == "unset" || s.empty()) return Thinking::Unset;
  if (s == "on" || s == "true") return Thinking::On;
  if (s == "off" || s == "false") return Thinking::Off;
  throw ValidationError("unknown thinking flag '" + std::string(s) + "' (expected on, off or unset)");
}

std::string_view to_string(ApiKind a) noexcept { return a == ApiKind::Completions ? "completions" : "chat"; }

ApiKind parse_api_kind(std::string_view s) {
  if (s == "completions") return ApiKind::Completions;
  if (s == "chat") return ApiKind::Chat;
  throw ValidationError("unknown api '" + std::string(s) + "' (expected completions or chat)");
}

TemplateSet TemplateSet::defaults() {
  TemplateSet set;
  for (TaskKind kind : {TaskKind::Answer, TaskKind::Choice}) {
    set.set({Mode::Direct, kind,
             std::string(kind == TaskKind::Answer ? kDirectAnswerSuffix : kDirectChoiceSuffix), "",
             Thinking::Unset});
    set.set({Mode::Standard, kind, "", "", Thinking::Unset});
    set.set({Mode::CoT, kind, std::string(kCoTSuffix), "", Thinking::Unset});
  }
  return set;
}

TemplateSet TemplateSet::reasoning_defaults() {
  TemplateSet set = defaults();
  for (auto& t : set.templates_) {
    if (t.regime == Mode::CoT) {
      t.thinking = Thinking::On;
    } else {
      t.thinking = Thinking::Off;
      t.system = "/no_think";
    }
  }
  return set;
}

const RegimeTemplate& TemplateSet::get(Mode mode, TaskKind kind) const {
  for (const auto& t : templates_) {
    if (t.regime == mode && t.task_kind == kind) return t;
  }
  throw ValidationError("no template for " + std::string(to_string(mode)) + "/" + std::string(to_string(kind)));
}

void TemplateSet::set(const RegimeTemplate& t) {
  if (t.regime == Mode::Standard && !t.suffix.empty()) {
    throw ValidationError("the Standard template must not carry a suffix");
  }
  for (auto& existing : templates_) {
    if (existing.regime == t.regime && existing.task_kind == t.task_kind) {
      existing = t;
      return;
    }
  }
  templates_.push_back(t);
}

TemplateSet TemplateSet::read(std::istream& in, const std::string& source) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(source, 0, std::string("invalid template JSON: ") + e.what());
  }
  TemplateSet set = defaults();
  try {
    for (const auto& e : j.at("templates")) {
      RegimeTemplate t;
      t.regime = parse_mode(e.at("regime").get<std::string>());
      t.task_kind = parse_task_kind(e.at("task_kind").get<std::string>());
      t.suffix = e.value("suffix", std::string());
      t.system = e.value("system", std::string());
      t.thinking = parse_thinking(e.value("thinking", std::string("unset")));
      set.set(t);
    }
  } catch (const json::exception& e) {
    throw ParseError(source, 0, e.what());
  } catch (const ValidationError& e) {
    throw ParseError(source, 0, e.what());
  }
  return set;
}

TemplateSet TemplateSet::load(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return read(in, path.string());
}

void TemplateSet::write(std::ostream& out) const {
  nlohmann::ordered_json j;
  j["templates"] = nlohmann::ordered_json::array();
  for (const auto& t : templates_) {
    j["templates"].push_back({{"regime", to_string(t.regime)},
                              {"task_kind", to_string(t.task_kind)},
                              {"suffix", t.suffix},
                              {"system", t.system},
                              {"thinking", to_string(t.thinking)}});
  }
  out << j.dump(2) << '\n';
}

std::string build_prompt(std::string_view question, const RegimeTemplate& t) {
  std::string out(question);
  if (!t.suffix.empty()) {
    out += '\n';
    out += t.suffix;
  }
  return out;
}

void ProbeConfig::validate() const {
  if (endpoint.empty()) throw ValidationError("probe endpoint is empty");
  if (!endpoint.starts_with("http://") && !endpoint.starts_with("https://")) {
    throw ValidationError("probe endpoint '" + endpoint + "' needs an http:// or https:// scheme");
  }
  if (probe_length < 2) throw ValidationError("probe_length must be >= 2");
  if (top_k < 1) throw ValidationError("top_k must be >= 1");
  if (timeout_ms <= 0) throw ValidationError("timeout_ms must be > 0");
  if (max_parallel < 1) throw ValidationError("max_parallel must be >= 1");
  if (max_retries < 0) throw ValidationError("max_retries must be >= 0");
  if (retry_backoff_ms < 0) throw ValidationError("retry_backoff_ms must be >= 0");
  if (max_tokens < 1) throw ValidationError("max_tokens must be >= 1");
}

std::string ProbeConfig::resolved_path() const {
  if (!path.empty()) return path;
  return api == ApiKind::Completions ? "/v1/completions" : "/v1/chat/completions";
}

std::vector<Question> read_questions(std::istream& in, const std::string& source) {
  std::vector<Question> out;
  detail::for_each_json_line(in, source, [&](const json& j, std::size_t) {
    Question q;
    q.instance_id = detail::require_string(j, "instance_id");
    q.dataset_id = detail::require_string(j, "dataset_id");
    q.text = detail::require_string(j, "question");
    if (j.contains("task_kind")) q.task_kind = parse_task_kind(detail::require_string(j, "task_kind"));
    out.push_back(std::move(q));
  });
  return out;
}

std::vector<Question> load_questions(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return read_questions(in, path.string());
}

namespace {

std::atomic<std::uint64_t> g_request_counter{0};

struct Reply {
  std::string text;
  std::string finish_reason;
  std::optional<std::int64_t> completion_tokens;
  std::optional<std::vector<std::vector<double>>> top_logprobs;  // per step
};

json request_body(const ProbeConfig& cfg, const RegimeTemplate& t, const std::string& prompt, std::size_t max_tokens,
                  bool want_logprobs) {
  json body{{"model", cfg.model}, {"max_tokens", max_tokens}, {"temperature", 0}, {"n", 1}};
  if (cfg.api == ApiKind::Completions) {
    body["prompt"] = prompt;
    if (want_logprobs) body["logprobs"] = cfg.top_k;
  } else {
    json messages = json::array();
    if (!t.system.empty()) messages.push_back({{"role", "system"}, {"content", t.system}});
    messages.push_back({{"role", "user"}, {"content", prompt}});
    body["messages"] = std::move(messages);
    if (want_logprobs) {
      body["logprobs"] = true;
      body["top_logprobs"] = cfg.top_k;
    }
    if (t.thinking != Thinking::Unset) {
      body["chat_template_kwargs"] = {{"enable_thinking", t.thinking == Thinking::On}};
    }
  }
  return body;
}

json post_with_retries(const ProbeConfig& cfg, const json& body, const std::string& request_id) {
  httplib::Client client(cfg.endpoint);
  const auto timeout = std::chrono::milliseconds(cfg.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  httplib::Headers headers{{"X-Request-Id", request_id}};
  if (!cfg.api_key_env.empty()) {
    if (const char* key = std::getenv(cfg.api_key_env.c_str()); key != nullptr && *key != '\0') {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }

  const std::string payload = body.dump();
  const std::string path = cfg.resolved_path();
  std::string last_error;
  const int attempts = cfg.max_retries + 1;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    if (attempt > 1 && cfg.retry_backoff_ms > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(cfg.retry_backoff_ms * (attempt - 1)));
    }
    auto res = client.Post(path, headers, payload, "application/json");
    if (!res) {
      last_error = "request to " + cfg.endpoint + path + " failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status) + " from " + cfg.endpoint + path;
      continue;
    }
    if (res->status >= 400) {
      throw ProtocolError("HTTP " + std::to_string(res->status) + " from " + cfg.endpoint + path + ": " +
                          res->body.substr(0, 200));
    }
    if (res->has_header("X-Request-Id") && res->get_header_value("X-Request-Id") != request_id) {
      throw ProtocolError("response correlation id does not match request '" + request_id + "'");
    }
    try {
      return json::parse(res->body);
    } catch (const json::exception& e) {
      throw ProtocolError(std::string("response is not JSON: ") + e.what());
    }
  }
  throw TransportError(attempts, last_error);
}

Reply parse_reply(const ProbeConfig& cfg, const json& j, bool want_logprobs) {
  try {
    if (!j.is_object() || !j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
      throw ProtocolError("response has no choices");
    }
    const json& choice = j["choices"][0];
    Reply r;
    if (cfg.api == ApiKind::Completions) {
      r.text = choice.at("text").get<std::string>();
    } else {
      const json& content = choice.at("message").at("content");
      r.text = content.is_null() ? std::string() : content.get<std::string>();
    }
    if (choice.contains("finish_reason") && choice["finish_reason"].is_string()) {
      r.finish_reason = choice["finish_reason"].get<std::string>();
    }
    if (j.contains("usage") && j["usage"].is_object() && j["usage"].contains("completion_tokens")) {
      r.completion_tokens = j["usage"]["completion_tokens"].get<std::int64_t>();
    }

    if (want_logprobs) {
      const auto lp = choice.find("logprobs");
      if (lp == choice.end() || lp->is_null()) throw CapabilityError("endpoint returned no log-probabilities");
      std::vector<std::vector<double>> steps;
      if (cfg.api == ApiKind::Completions) {
        const auto top = lp->find("top_logprobs");
        if (top == lp->end() || top->is_null()) throw CapabilityError("endpoint returned no top log-probabilities");
        for (const auto& step : *top) {
          if (!step.is_object() || step.empty()) throw ProtocolError("empty top_logprobs entry");
          std::vector<double> v;
          for (const auto& [token, value] : step.items()) v.push_back(value.get<double>());
          steps.push_back(std::move(v));
        }
      } else {
        const auto content = lp->find("content");
        if (content == lp->end() || content->is_null()) throw CapabilityError("endpoint returned no log-probabilities");
        for (const auto& step : *content) {
          const json& top = step.at("top_logprobs");
          if (!top.is_array() || top.empty()) throw CapabilityError("endpoint returned no top log-probabilities");
          std::vector<double> v;
          for (const auto& alt : top) v.push_back(alt.at("logprob").get<double>());
          steps.push_back(std::move(v));
        }
      }
      r.top_logprobs = std::move(steps);
    }
    if (!r.completion_tokens) {
      if (!r.top_logprobs) throw ProtocolError("response has no usage.completion_tokens");
      r.completion_tokens = static_cast<std::int64_t>(r.top_logprobs->size());
    }
    return r;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed completion response: ") + e.what());
  }
}

std::string next_request_id(const std::string& instance_id, const char* kind) {
  return instance_id + ":" + kind + ":" + std::to_string(g_request_counter.fetch_add(1));
}

}  // namespace

ProbeClient::ProbeClient(ProbeConfig cfg, TemplateSet templates) : cfg_(std::move(cfg)), templates_(std::move(templates)) {
  cfg_.validate();
}

ProbeResult ProbeClient::probe(const Question& q) const {
  const RegimeTemplate& t = templates_.get(Mode::Standard, q.task_kind);
  const json body = request_body(cfg_, t, build_prompt(q.text, t), cfg_.probe_length, true);
  const Reply reply = parse_reply(cfg_, post_with_retries(cfg_, body, next_request_id(q.instance_id, "probe")), true);

  const EntropyOptions opts{cfg_.include_residual};
  std::vector<double> entropies;
  const auto& steps = *reply.top_logprobs;
  const std::size_t n = std::min(steps.size(), cfg_.probe_length);
  entropies.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    try {
      entropies.push_back(token_entropy(TokenDistribution::from_top_logprobs(steps[i]), opts));
    } catch (const ValidationError& e) {
      throw ProtocolError("step " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  ProbeResult out;
  out.trace = EntropyTrace(q.instance_id, q.dataset_id, cfg_.probe_length, std::move(entropies), true);
  out.text = reply.text;
  out.output_tokens = *reply.completion_tokens;
  return out;
}

Generation ProbeClient::generate(const Question& q, Mode mode) const {
  const RegimeTemplate& t = templates_.get(mode, q.task_kind);
  Generation g;
  g.prompt = build_prompt(q.text, t);
  const json body = request_body(cfg_, t, g.prompt, cfg_.max_tokens, false);
  const Reply reply = parse_reply(cfg_, post_with_retries(cfg_, body, next_request_id(q.instance_id, "generate")), false);
  g.text = reply.text;
  g.output_tokens = *reply.completion_tokens;
  g.finish_reason = reply.finish_reason;
  return g;
}

Generation ProbeClient::continue_standard(const Question& q, const ProbeResult& prefix) const {
  if (cfg_.api != ApiKind::Completions) throw ValidationError("prefix continuation needs the completions API");
  const RegimeTemplate& t = templates_.get(Mode::Standard, q.task_kind);
  Generation g;
  g.prompt = build_prompt(q.text, t);
  g.text = prefix.text;
  g.output_tokens = prefix.output_tokens;
  const auto used = static_cast<std::size_t>(std::max<std::int64_t>(prefix.output_tokens, 0));
  if (prefix.trace.terminated_early() || used >= cfg_.max_tokens) {
    g.finish_reason = prefix.trace.terminated_early() ? "stop" : "length";
    return g;
  }
  const json body = request_body(cfg_, t, g.prompt + prefix.text, cfg_.max_tokens - used, false);
  const Reply reply = parse_reply(cfg_, post_with_retries(cfg_, body, next_request_id(q.instance_id, "continue")), false);
  g.text += reply.text;
  g.output_tokens += *reply.completion_tokens;
  g.finish_reason = reply.finish_reason;
  return g;
}

std::vector<ProbeOutcome> ProbeClient::probe_many(std::span<const Question> questions) const {
  std::vector<ProbeOutcome> outcomes(questions.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < questions.size(); i = next.fetch_add(1)) {
      ProbeOutcome& o = outcomes[i];
      o.instance_id = questions[i].instance_id;
      o.dataset_id = questions[i].dataset_id;
      try {
        o.result = probe(questions[i]);
      } catch (const TransportError& e) {
        o.error_kind = "transport";
        o.error = e.what();
      } catch (const CapabilityError& e) {
        o.error_kind = "capability";
        o.error = e.what();
      } catch (const ProtocolError& e) {
        o.error_kind = "protocol";
        o.error = e.what();
      } catch (const Error& e) {
        o.error_kind = "validation";
        o.error = e.what();
      }
    }
  };
  const std::size_t n_threads = std::min(cfg_.max_parallel, questions.size());
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return outcomes;
}

}  // namespace entroute
