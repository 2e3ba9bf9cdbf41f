#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "entroute/learned_router.hpp"
#include "entroute/types.hpp"

namespace fixture {

struct ModeCell {
  double accuracy_pct;
  double avg_tokens;
};

/// Per-mode accuracy and mean output tokens of one benchmark row, Direct/Standard/CoT.
struct BenchmarkRow {
  std::string dataset;
  std::array<ModeCell, 3> modes;
};

// Reference per-mode results for four benchmarks on a 3B instruction-tuned model.
inline const std::vector<BenchmarkRow>& benchmark_rows() {
  static const std::vector<BenchmarkRow> rows{
      {"ARC-C", {{{71.93, 4.0}, {76.54, 177.9}, {75.17, 243.8}}}},
      {"FOLIO", {{{43.27, 3.8}, {44.77, 298.2}, {48.59, 334.4}}}},
      {"GSM8K", {{{8.42, 6.0}, {75.66, 227.2}, {74.07, 231.5}}}},
      {"StratQA", {{{81.40, 4.3}, {61.44, 121.9}, {70.52, 225.9}}}},
  };
  return rows;
}

/// n records whose per-mode accuracy and token mean hit the row exactly: the first
/// round(acc * n) instances are correct, and token counts mix floor and floor + 1.
inline std::vector<entroute::InstanceRecord> records_for(const BenchmarkRow& row, std::size_t n = 10000) {
  std::vector<entroute::InstanceRecord> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].dataset_id = row.dataset;
    out[i].instance_id = row.dataset + "-" + std::to_string(i);
  }
  for (std::size_t m = 0; m < 3; ++m) {
    const auto correct = static_cast<std::size_t>(std::llround(row.modes[m].accuracy_pct / 100.0 * static_cast<double>(n)));
    const auto total = std::llround(row.modes[m].avg_tokens * static_cast<double>(n));
    const auto base = total / static_cast<long long>(n);
    const auto extra = static_cast<std::size_t>(total % static_cast<long long>(n));
    for (std::size_t i = 0; i < n; ++i) {
      out[i].outcomes[m].correct = i < correct;
      out[i].outcomes[m].tokens = base + (i < extra ? 1 : 0);
    }
  }
  return out;
}

/// Three Gaussian classes in `dim` dimensions whose centres sit 6 sigma apart along
/// distinct axes. Labels are one-hot on the class.
inline std::vector<entroute::LabeledExample> blobs(std::size_t per_class, std::uint64_t seed,
                                                   std::size_t dim = 3, const std::string& prefix = "b") {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<entroute::LabeledExample> out;
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      entroute::LabeledExample e;
      e.instance_id = prefix + std::to_string(c) + "-" + std::to_string(i);
      e.dataset_id = "blobs";
      e.feature.variant = entroute::FeatureVariant::D3;
      e.feature.values.resize(dim);
      for (std::size_t d = 0; d < dim; ++d) e.feature.values[d] = noise(eng) + (d == c ? 6.0 : 0.0);
      e.labels.y[c] = 1;
      out.push_back(std::move(e));
    }
  }
  return out;
}

/// A record with given outcomes and a full-length entropy trace.
inline entroute::InstanceRecord record_with_trace(const std::string& id, std::vector<double> entropies,
                                                  std::array<entroute::ModeOutcome, 3> outcomes,
                                                  const std::string& dataset = "d") {
  entroute::InstanceRecord r;
  r.instance_id = id;
  r.dataset_id = dataset;
  r.outcomes = outcomes;
  const std::size_t n = entropies.size();
  r.trace = entroute::EntropyTrace(id, dataset, n, std::move(entropies));
  return r;
}

}  // namespace fixture
