#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "entroute/types.hpp"

namespace entroute {

struct DescriptorConfig {
  double epsilon = 1e-8;          // variance stabiliser in the von Neumann ratio
  std::size_t probe_length = 64;  // N

  void validate() const;
};

using DescriptorResult = std::variant<Descriptors, EarlyStop>;

[[nodiscard]] inline bool is_early_stop(const DescriptorResult& r) noexcept {
  return std::holds_alternative<EarlyStop>(r);
}

// Sequence-level statistics. These take the entropy values directly and are also used
// on zero-padded trajectories by the learned router.

/// Sum of the entropies, accumulated left to right in extended precision.
[[nodiscard]] double cumulative_entropy(std::span<const double> values);

/// 1-based ranks; tied values share the average of the ranks they span.
[[nodiscard]] std::vector<double> average_ranks(std::span<const double> values);

/// Spearman correlation between step index 1..N and the values. Returns 0 for a
/// constant sequence. Throws ValidationError when N < 2.
[[nodiscard]] double spearman_trend(std::span<const double> values);

/// Mean square successive difference (divided by N-1) over population variance
/// (divided by N) plus epsilon. Exactly 0 when the variance is 0.
/// Throws ValidationError when N < 2.
[[nodiscard]] double von_neumann_ratio(std::span<const double> values, double epsilon);

/// All three statistics over an arbitrary sequence of length >= 2.
[[nodiscard]] Descriptors compute_descriptors(std::span<const double> values, double epsilon);

// Trace-level wrappers. These refuse early-terminated traces with EarlyStopError.

[[nodiscard]] double cumulative_entropy(const EntropyTrace& trace);
[[nodiscard]] double spearman_trend(const EntropyTrace& trace);
[[nodiscard]] double von_neumann_ratio(const EntropyTrace& trace, const DescriptorConfig& cfg);

/// EarlyStop when the probe ended before probe_length tokens; descriptors otherwise.
[[nodiscard]] DescriptorResult extract_descriptors(const EntropyTrace& trace, const DescriptorConfig& cfg);

/// One line of a descriptor dump.
struct DescriptorRecord {
  std::string instance_id;
  std::string dataset_id;
  DescriptorResult result;

  friend bool operator==(const DescriptorRecord&, const DescriptorRecord&) = default;
};

/// JSON Lines: instance_id, dataset_id and either s_h/v_sp/a_vnr or early_stop: true.
[[nodiscard]] std::vector<DescriptorRecord> read_descriptor_records(std::istream& in, const std::string& source);
[[nodiscard]] std::vector<DescriptorRecord> load_descriptor_records(const std::filesystem::path& path);
void write_descriptor_records(std::ostream& out, std::span<const DescriptorRecord> records);

}  // namespace entroute
