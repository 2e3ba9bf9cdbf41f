#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace entroute {

/// Decoding regime. The numeric order is also the priority order used for tie-breaks
/// (Direct > Standard > CoT).
enum class Mode : std::uint8_t { Direct = 0, Standard = 1, CoT = 2 };

inline constexpr std::array<Mode, 3> kAllModes{Mode::Direct, Mode::Standard, Mode::CoT};

[[nodiscard]] constexpr std::size_t index_of(Mode m) noexcept { return static_cast<std::size_t>(m); }

/// Lower-case wire name: "direct", "standard", "cot".
[[nodiscard]] std::string_view to_string(Mode m) noexcept;
/// Accepts the wire names case-insensitively plus the single letters D/S/C.
[[nodiscard]] Mode parse_mode(std::string_view text);

/// The triple summarising one entropy trajectory.
struct Descriptors {
  double s_h = 0.0;    // cumulative entropy (nats)
  double v_sp = 0.0;   // Spearman trend, in [-1, 1]
  double a_vnr = 0.0;  // von Neumann ratio, >= 0

  friend bool operator==(const Descriptors&, const Descriptors&) = default;
};

/// Marker returned instead of descriptors when the probe stopped before N tokens.
struct EarlyStop {
  friend bool operator==(const EarlyStop&, const EarlyStop&) = default;
};

enum class RoutingReason : std::uint8_t {
  DivergenceRule,
  OverloadRule,
  ConvergenceRule,
  DefaultStandard,
  EarlyStop,
  LearnedRouter,
};

[[nodiscard]] std::string_view to_string(RoutingReason r) noexcept;
[[nodiscard]] RoutingReason parse_reason(std::string_view text);

/// Outcome of routing one instance (or one dataset, in which case `instance_id` is empty).
struct RoutingDecision {
  std::string instance_id;
  std::string dataset_id;
  Mode mode = Mode::Standard;
  std::optional<Descriptors> descriptors;
  RoutingReason reason = RoutingReason::DefaultStandard;

  [[nodiscard]] bool dataset_level() const noexcept { return instance_id.empty(); }

  friend bool operator==(const RoutingDecision&, const RoutingDecision&) = default;
};

/// Throws ValidationError when reason == EarlyStop but mode != Standard.
void validate(const RoutingDecision& decision);

/// Next-token distribution over a (possibly truncated) candidate list.
class TokenDistribution {
 public:
  /// Validates: every p in [0,1], sum + residual within 1e-6 of 1, residual == 0 unless truncated.
  TokenDistribution(std::vector<double> probabilities, bool truncated = false, double residual_mass = 0.0);

  [[nodiscard]] const std::vector<double>& probabilities() const noexcept { return probabilities_; }
  [[nodiscard]] bool truncated() const noexcept { return truncated_; }
  [[nodiscard]] double residual_mass() const noexcept { return residual_mass_; }

  /// Builds a truncated distribution from top-k log-probabilities. The residual is
  /// 1 - sum(exp(lp)); candidate mass slightly above 1 from API rounding is renormalised.
  [[nodiscard]] static TokenDistribution from_top_logprobs(const std::vector<double>& logprobs);

 private:
  std::vector<double> probabilities_;
  bool truncated_;
  double residual_mass_;
};

/// Per-step entropies (nats) from an N-step probe.
class EntropyTrace {
 public:
  EntropyTrace() = default;
  /// Validates values (finite, >= 0) and length (<= probe_length); derives terminated_early.
  /// `approximate` marks traces computed from truncated top-k distributions.
  EntropyTrace(std::string instance_id, std::string dataset_id, std::size_t probe_length,
               std::vector<double> values, bool approximate = false);

  [[nodiscard]] const std::string& instance_id() const noexcept { return instance_id_; }
  [[nodiscard]] const std::string& dataset_id() const noexcept { return dataset_id_; }
  [[nodiscard]] std::size_t probe_length() const noexcept { return probe_length_; }
  [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }
  [[nodiscard]] bool terminated_early() const noexcept { return values_.size() < probe_length_; }
  [[nodiscard]] bool approximate() const noexcept { return approximate_; }

  friend bool operator==(const EntropyTrace&, const EntropyTrace&) = default;

 private:
  std::string instance_id_;
  std::string dataset_id_;
  std::size_t probe_length_ = 0;
  std::vector<double> values_;
  bool approximate_ = false;
};

struct ModeOutcome {
  bool correct = false;
  std::int64_t tokens = 0;  // output tokens only

  friend bool operator==(const ModeOutcome&, const ModeOutcome&) = default;
};

/// Per-instance correctness and output-token counts for all three regimes.
struct InstanceRecord {
  std::string instance_id;
  std::string dataset_id;
  std::array<ModeOutcome, 3> outcomes{};  // indexed by index_of(Mode)
  std::optional<EntropyTrace> trace;

  [[nodiscard]] const ModeOutcome& outcome(Mode m) const noexcept { return outcomes[index_of(m)]; }
  [[nodiscard]] ModeOutcome& outcome(Mode m) noexcept { return outcomes[index_of(m)]; }

  friend bool operator==(const InstanceRecord&, const InstanceRecord&) = default;
};

}  // namespace entroute
