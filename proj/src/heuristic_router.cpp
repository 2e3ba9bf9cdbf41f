#include "entroute/heuristic_router.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "entroute/errors.hpp"

namespace entroute {

void RouterConfig::validate() const {
  if (!(k >= 0.0) || !std::isfinite(k)) throw ValidationError("k must be >= 0");
  if (!(s_h_threshold > 0.0) || !std::isfinite(s_h_threshold)) throw ValidationError("s_h_threshold must be > 0");
}

void DatasetStats::validate() const {
  if (sample_count < 1) throw ValidationError("dataset '" + dataset_id + "' has no usable samples");
}

RoutingDecision route(const DescriptorResult& desc, const RouterConfig& cfg) {
  RoutingDecision out;
  const auto* d = std::get_if<Descriptors>(&desc);
  if (d == nullptr) {
    out.mode = Mode::Standard;
    out.reason = RoutingReason::EarlyStop;
    return out;
  }
  out.descriptors = *d;

  const double bound = cfg.use_volatility ? cfg.k * d->a_vnr : cfg.k;
  if (d->v_sp > bound) {
    out.mode = Mode::Direct;
    out.reason = RoutingReason::DivergenceRule;
  } else if (cfg.use_s_h_guardrail && d->v_sp > 0.0 && d->s_h > cfg.s_h_threshold) {
    out.mode = Mode::Direct;
    out.reason = RoutingReason::OverloadRule;
  } else if (d->v_sp < -bound) {
    out.mode = Mode::CoT;
    out.reason = RoutingReason::ConvergenceRule;
  } else {
    out.mode = Mode::Standard;
    out.reason = RoutingReason::DefaultStandard;
  }
  return out;
}

RoutingDecision route(const EntropyTrace& trace, const DescriptorConfig& dcfg, const RouterConfig& cfg) {
  RoutingDecision out = route(extract_descriptors(trace, dcfg), cfg);
  out.instance_id = trace.instance_id();
  out.dataset_id = trace.dataset_id();
  return out;
}

RoutingDecision route_dataset(const DatasetStats& stats, const RouterConfig& cfg) {
  stats.validate();
  RoutingDecision out = route(Descriptors{stats.mean_s_h, stats.mean_v_sp, stats.mean_a_vnr}, cfg);
  out.dataset_id = stats.dataset_id;
  return out;
}

DatasetStats dataset_stats(const std::string& dataset_id, std::span<const DescriptorResult> results) {
  DatasetStats stats;
  stats.dataset_id = dataset_id;
  long double s = 0.0L, v = 0.0L, a = 0.0L;
  for (const auto& r : results) {
    if (const auto* d = std::get_if<Descriptors>(&r)) {
      s += d->s_h;
      v += d->v_sp;
      a += d->a_vnr;
      ++stats.sample_count;
    } else {
      ++stats.early_stop_count;
    }
  }
  if (stats.sample_count == 0) {
    throw ValidationError("dataset '" + dataset_id + "': no complete probes, statistics unavailable");
  }
  const auto n = static_cast<long double>(stats.sample_count);
  stats.mean_s_h = static_cast<double>(s / n);
  stats.mean_v_sp = static_cast<double>(v / n);
  stats.mean_a_vnr = static_cast<double>(a / n);
  return stats;
}

DatasetStats dataset_stats(std::span<const EntropyTrace> traces, const DescriptorConfig& cfg) {
  if (traces.empty()) throw ValidationError("dataset_stats needs at least one trace");
  const std::string& id = traces.front().dataset_id();
  std::vector<DescriptorResult> results;
  results.reserve(traces.size());
  for (const auto& t : traces) {
    if (t.dataset_id() != id) {
      throw ValidationError("dataset_stats got traces from '" + id + "' and '" + t.dataset_id() + "'");
    }
    results.push_back(extract_descriptors(t, cfg));
  }
  return dataset_stats(id, results);
}

double calibrate_threshold(std::span<const DatasetStats> all_stats) {
  if (all_stats.empty()) throw ValidationError("calibration needs at least one dataset");
  std::vector<double> sorted;
  sorted.reserve(all_stats.size());
  std::size_t convergent = 0;
  for (const auto& s : all_stats) {
    if (s.mean_v_sp < 0.0) ++convergent;
    sorted.push_back(s.mean_s_h);
  }
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = std::clamp<std::size_t>(convergent, 1, sorted.size());
  return std::floor(sorted[m - 1]);
}

}  // namespace entroute
