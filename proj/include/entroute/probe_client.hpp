#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "entroute/trace_model.hpp"
#include "entroute/types.hpp"

namespace entroute {

enum class TaskKind : std::uint8_t { Answer, Choice };
enum class Thinking : std::uint8_t { Unset, On, Off };
enum class ApiKind : std::uint8_t { Completions, Chat };

[[nodiscard]] std::string_view to_string(TaskKind k) noexcept;
[[nodiscard]] TaskKind parse_task_kind(std::string_view s);
[[nodiscard]] std::string_view to_string(Thinking t) noexcept;
[[nodiscard]] Thinking parse_thinking(std::string_view s);
[[nodiscard]] std::string_view to_string(ApiKind a) noexcept;
[[nodiscard]] ApiKind parse_api_kind(std::string_view s);

struct RegimeTemplate {
  Mode regime = Mode::Standard;
  TaskKind task_kind = TaskKind::Answer;
  std::string suffix;  // appended after a newline; empty for Standard
  std::string system;  // system message (chat API only)
  Thinking thinking = Thinking::Unset;
};

/// One template per (regime, task kind).
class TemplateSet {
 public:
  /// Base-model prompts with thinking control left unset.
  [[nodiscard]] static TemplateSet defaults();
  /// Defaults plus enable_thinking off (and a "/no_think" system prompt) for Direct and
  /// Standard, on for CoT.
  [[nodiscard]] static TemplateSet reasoning_defaults();

  [[nodiscard]] static TemplateSet read(std::istream& in, const std::string& source);
  [[nodiscard]] static TemplateSet load(const std::filesystem::path& path);
  void write(std::ostream& out) const;

  [[nodiscard]] const RegimeTemplate& get(Mode mode, TaskKind kind) const;
  void set(const RegimeTemplate& t);

 private:
  std::vector<RegimeTemplate> templates_;
};

inline constexpr std::string_view kDirectAnswerSuffix =
    "Your answer must not include any reasoning step. You must only write your answer directly. "
    "You only output 'The answer is <answer>'.";
inline constexpr std::string_view kDirectChoiceSuffix =
    "Your answer must not include any reasoning. Write the answer: 'Answer: <Your Answer Letter Choice>'";
inline constexpr std::string_view kCoTSuffix = "Let's think step by step.";

/// question, or question + "\n" + suffix when the template has one.
[[nodiscard]] std::string build_prompt(std::string_view question, const RegimeTemplate& t);

struct ProbeConfig {
  std::string endpoint = "http://127.0.0.1:8000";  // scheme://host[:port]
  std::string path;                                // empty: /v1/completions or /v1/chat/completions
  ApiKind api = ApiKind::Completions;
  std::string model = "default";
  std::size_t probe_length = 64;
  std::size_t top_k = 20;
  int timeout_ms = 30000;
  std::size_t max_parallel = 4;
  int max_retries = 3;  // attempts after the first
  int retry_backoff_ms = 100;
  std::size_t max_tokens = 4096;   // generation budget
  std::string api_key_env = "OPENAI_API_KEY";
  bool include_residual = true;

  void validate() const;
  [[nodiscard]] std::string resolved_path() const;
};

struct Question {
  std::string instance_id;
  std::string dataset_id;
  std::string text;
  TaskKind task_kind = TaskKind::Answer;
};

/// JSONL with instance_id, dataset_id, question and optional task_kind ("answer" | "choice").
[[nodiscard]] std::vector<Question> read_questions(std::istream& in, const std::string& source);
[[nodiscard]] std::vector<Question> load_questions(const std::filesystem::path& path);

struct ProbeResult {
  EntropyTrace trace;
  std::string text;                 // the probe's generated prefix
  std::int64_t output_tokens = 0;   // completion tokens reported by the endpoint
};

struct Generation {
  std::string prompt;
  std::string text;
  std::int64_t output_tokens = 0;
  std::string finish_reason;
};

/// Per-question outcome of a batch probe.
struct ProbeOutcome {
  std::string instance_id;
  std::string dataset_id;
  std::optional<ProbeResult> result;
  std::string error_kind;  // "transport", "capability", "protocol" or "validation"; empty on success
  std::string error;
};

/// Client for OpenAI-compatible completion endpoints with log-probabilities.
/// Safe for concurrent use; every call opens its own connection.
class ProbeClient {
 public:
  ProbeClient(ProbeConfig cfg, TemplateSet templates);

  /// Greedy N-step decode of the Standard prompt with top-k log-probabilities.
  [[nodiscard]] ProbeResult probe(const Question& q) const;

  /// Full answer in `mode`, up to max_tokens.
  [[nodiscard]] Generation generate(const Question& q, Mode mode) const;

  /// Standard answer that continues from the probe's prefix (completions API).
  /// The returned token count includes the prefix.
  [[nodiscard]] Generation continue_standard(const Question& q, const ProbeResult& prefix) const;

  /// Probes every question with at most max_parallel requests in flight. Outcomes are
  /// returned in input order; failures are recorded per question.
  [[nodiscard]] std::vector<ProbeOutcome> probe_many(std::span<const Question> questions) const;

  [[nodiscard]] const ProbeConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] const TemplateSet& templates() const noexcept { return templates_; }

 private:
  ProbeConfig cfg_;
  TemplateSet templates_;
};

}  // namespace entroute
