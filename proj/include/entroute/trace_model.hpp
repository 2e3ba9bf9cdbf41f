#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "entroute/types.hpp"

namespace entroute {

/// Layout of a trace file. Both are JSON Lines with instance_id, dataset_id and
/// probe_length on every line.
enum class TraceFormat {
  Entropies,      // "entropies": [H_1, ..., H_T]
  Distributions,  // "distributions": [[p...], ...], optional "truncated": bool
};

[[nodiscard]] TraceFormat parse_trace_format(std::string_view text);

struct EntropyOptions {
  // Count the uncovered mass of a truncated distribution as one pseudo-token (-r log r).
  bool include_residual = true;
};

/// Shannon entropy in nats. Zero-probability entries contribute exactly 0.
[[nodiscard]] double token_entropy(const TokenDistribution& dist, const EntropyOptions& opts = {});

[[nodiscard]] std::vector<EntropyTrace> load_traces(const std::filesystem::path& path,
                                                    TraceFormat format = TraceFormat::Entropies,
                                                    const EntropyOptions& opts = {});
[[nodiscard]] std::vector<EntropyTrace> read_traces(std::istream& in, const std::string& source,
                                                    TraceFormat format = TraceFormat::Entropies,
                                                    const EntropyOptions& opts = {});
void write_traces(std::ostream& out, std::span<const EntropyTrace> traces);
void save_traces(const std::filesystem::path& path, std::span<const EntropyTrace> traces);

/// Records carry "direct", "standard" and "cot" objects of the form {correct: 0|1, tokens: int}
/// and optionally "entropies" + "probe_length" for the probe trace.
[[nodiscard]] std::vector<InstanceRecord> load_instance_records(const std::filesystem::path& path);
[[nodiscard]] std::vector<InstanceRecord> read_instance_records(std::istream& in, const std::string& source);
void write_instance_records(std::ostream& out, std::span<const InstanceRecord> records);
void save_instance_records(const std::filesystem::path& path, std::span<const InstanceRecord> records);

/// Rejects duplicate (dataset_id, instance_id) pairs and negative token counts.
void validate_records(std::span<const InstanceRecord> records);

/// Routing decisions as JSON Lines. Dataset-level decisions omit instance_id.
[[nodiscard]] std::vector<RoutingDecision> load_decisions(const std::filesystem::path& path);
[[nodiscard]] std::vector<RoutingDecision> read_decisions(std::istream& in, const std::string& source);
void write_decisions(std::ostream& out, std::span<const RoutingDecision> decisions);
void save_decisions(const std::filesystem::path& path, std::span<const RoutingDecision> decisions);

}  // namespace entroute
