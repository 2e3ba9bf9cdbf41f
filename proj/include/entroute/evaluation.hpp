#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "entroute/descriptors.hpp"
#include "entroute/heuristic_router.hpp"
#include "entroute/types.hpp"

namespace entroute {

/// Token bill of one instance-level routed answer.
struct InstanceCost {
  std::int64_t answer_tokens = 0;
  std::int64_t probe_tokens = 0;     // N unless routed Standard (the probe prefix is reused)
  std::int64_t fallback_tokens = 0;  // Direct tokens when a non-Direct answer runs with fallback
  std::int64_t total_tokens = 0;

  friend bool operator==(const InstanceCost&, const InstanceCost&) = default;
};

[[nodiscard]] InstanceCost instance_cost(const InstanceRecord& record, Mode routed, bool enable_fallback,
                                         std::size_t probe_length);

/// Routed answer correct, or (fallback on and routed != Direct) the Direct answer correct.
[[nodiscard]] bool instance_correct(const InstanceRecord& record, Mode routed, bool enable_fallback);

/// D:S:C counts of dataset-level decisions over repeated seeds.
struct Consistency {
  std::size_t direct = 0;
  std::size_t standard = 0;
  std::size_t cot = 0;

  [[nodiscard]] std::size_t total() const noexcept { return direct + standard + cot; }
  friend bool operator==(const Consistency&, const Consistency&) = default;
};

/// Counts seeds per mode. An empty list yields 0:0:0 and a warning.
[[nodiscard]] Consistency consistency_ratio(std::span<const Mode> per_seed);
[[nodiscard]] Consistency consistency_ratio(std::span<const RoutingDecision> per_seed);

struct ReportEntry {
  std::string dataset_id;  // "overall" for the aggregate row
  std::string policy;      // "direct", "standard", "cot", "global", "instance", ...
  double accuracy = 0.0;   // fraction in [0, 1]
  double avg_tokens = 0.0;
  std::size_t instance_count = 0;
  std::optional<Consistency> consistency;
};

/// Per-dataset rows in first-appearance order plus an instance-weighted overall row.
struct EvaluationReport {
  std::string policy;
  std::vector<ReportEntry> datasets;
  ReportEntry overall;

  [[nodiscard]] const ReportEntry& dataset(const std::string& id) const;
};

/// Accuracy and average tokens of the selected mode over the decision's dataset.
/// No probe or fallback terms. Throws ValidationError if the dataset has no records.
[[nodiscard]] ReportEntry score_dataset_routing(std::span<const InstanceRecord> records,
                                                const RoutingDecision& decision);
/// One dataset-level decision per dataset present in `records`; missing or unknown
/// datasets raise ValidationError listing the ids.
[[nodiscard]] EvaluationReport score_dataset_routing(std::span<const InstanceRecord> records,
                                                     std::span<const RoutingDecision> decisions);

/// Always-`mode` baseline.
[[nodiscard]] EvaluationReport score_static(std::span<const InstanceRecord> records, Mode mode);

/// Instance-level accounting with probe overhead and (optionally) fallback compensation.
/// Every record needs exactly one decision and every decision a record.
[[nodiscard]] EvaluationReport score_instance_routing(std::span<const InstanceRecord> records,
                                                      std::span<const RoutingDecision> decisions,
                                                      const RouterConfig& cfg, std::size_t probe_length);

/// Mean accuracy and tokens over per-seed reports of the same policy and datasets.
[[nodiscard]] EvaluationReport average_reports(std::span<const EvaluationReport> per_seed);

struct UnifiedGainConfig {
  double lambda = 0.05;         // cost penalty per token_scale tokens
  double token_scale = 1000.0;

  void validate() const;
};

/// correct_m - lambda * T_m / token_scale.
[[nodiscard]] double unified_utility(const InstanceRecord& record, Mode mode, const UnifiedGainConfig& cfg);
/// U(a) - U(b).
[[nodiscard]] double unified_gain(const InstanceRecord& record, Mode a, Mode b, const UnifiedGainConfig& cfg);

/// Bins for the (V_sp / a_vnr, S_H) plane. Explicit edges override the bin counts;
/// otherwise edges are uniform over the observed range of each axis.
struct GridSpec {
  std::size_t x_bins = 12;
  std::size_t y_bins = 12;
  std::vector<double> x_edges;
  std::vector<double> y_edges;
  double vnr_floor = 1e-6;  // instances with a_vnr below this go to the overflow bucket

  void validate() const;
};

struct HeatmapCell {
  double x_lo = 0.0;
  double x_hi = 0.0;
  double y_lo = 0.0;
  double y_hi = 0.0;
  double mean_delta_u = 0.0;  // NaN for empty cells
  std::size_t count = 0;
};

struct HeatmapGrid {
  std::vector<double> x_edges;
  std::vector<double> y_edges;
  std::vector<HeatmapCell> cells;  // y-major: cells[iy * x_bins + ix]
  std::size_t low_vnr_count = 0;       // overflow: ratio undefined
  std::size_t out_of_range_count = 0;  // overflow: outside explicit edges
  std::size_t skipped_count = 0;       // no trace or early-stopped probe; not binnable

  [[nodiscard]] std::size_t x_bins() const noexcept { return x_edges.size() - 1; }
  [[nodiscard]] std::size_t y_bins() const noexcept { return y_edges.size() - 1; }
  [[nodiscard]] const HeatmapCell& cell(std::size_t ix, std::size_t iy) const { return cells.at(iy * x_bins() + ix); }
  [[nodiscard]] std::size_t binned_count() const noexcept;
  [[nodiscard]] std::size_t overflow_count() const noexcept { return low_vnr_count + out_of_range_count; }
};

/// Mean unified gain of CoT over Direct per cell of the (V_sp / a_vnr, S_H) plane.
[[nodiscard]] HeatmapGrid build_heatmap(std::span<const InstanceRecord> records, const GridSpec& grid,
                                        const UnifiedGainConfig& ug_cfg, const DescriptorConfig& desc_cfg);

void write_report_json(std::ostream& out, std::span<const EvaluationReport> reports);
/// Columns: dataset, mode_or_policy, accuracy, avg_tokens, d, s, c.
void write_report_csv(std::ostream& out, std::span<const EvaluationReport> reports);
/// Columns: x_lo, x_hi, y_lo, y_hi, mean_delta_u, count.
void write_heatmap_csv(std::ostream& out, const HeatmapGrid& grid);
/// Edges and bucket counts that do not fit the cell table.
void write_heatmap_summary(std::ostream& out, const HeatmapGrid& grid, const UnifiedGainConfig& ug_cfg);

}  // namespace entroute
