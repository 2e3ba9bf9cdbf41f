#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "entroute/descriptors.hpp"
#include "entroute/types.hpp"

namespace entroute {

inline constexpr double kBaseModelThreshold = 32.0;
inline constexpr double kReasoningModelThreshold = 10.0;

/// Thresholds of the three-branch rule plus the ablation switches.
struct RouterConfig {
  double k = 0.07;                            // trend-vs-volatility coupling
  double s_h_threshold = kBaseModelThreshold;  // uncertainty-overload cutoff (nats)
  bool enable_fallback = true;                // run Direct alongside non-Direct answers
  bool use_s_h_guardrail = true;              // false: "w/o S_H" ablation
  bool use_volatility = true;                 // false: "w/o a_vnr" ablation, compare V_sp with +-k

  void validate() const;
};

/// Dataset-level means of per-instance descriptors. Early-stopped probes are excluded
/// from the means and counted separately.
struct DatasetStats {
  std::string dataset_id;
  double mean_s_h = 0.0;
  double mean_v_sp = 0.0;
  double mean_a_vnr = 0.0;
  std::size_t sample_count = 0;
  std::size_t early_stop_count = 0;

  void validate() const;
};

/// Applies the rule to one instance. Direct clauses are tested before the CoT clause;
/// equality with +-k*a_vnr falls through to Standard. The returned decision carries no ids.
[[nodiscard]] RoutingDecision route(const DescriptorResult& desc, const RouterConfig& cfg);

/// Probe trace -> descriptors -> decision, with instance and dataset ids filled in.
[[nodiscard]] RoutingDecision route(const EntropyTrace& trace, const DescriptorConfig& dcfg,
                                    const RouterConfig& cfg);

/// Applies the rule to (mean S_H, mean V_sp, mean a_vnr). The decision's instance_id is empty.
[[nodiscard]] RoutingDecision route_dataset(const DatasetStats& stats, const RouterConfig& cfg);

/// Per-instance descriptors first, then arithmetic means. All traces must share a dataset_id.
/// Throws ValidationError when the span is empty or every probe stopped early.
[[nodiscard]] DatasetStats dataset_stats(std::span<const EntropyTrace> traces, const DescriptorConfig& cfg);
[[nodiscard]] DatasetStats dataset_stats(const std::string& dataset_id, std::span<const DescriptorResult> results);

/// floor of the M-th smallest dataset mean S_H, where M is the number of datasets with
/// negative mean trend, clamped to [1, J].
[[nodiscard]] double calibrate_threshold(std::span<const DatasetStats> all_stats);

}  // namespace entroute
