#include "entroute/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <unordered_map>
#include <utility>

#include "entroute/errors.hpp"
#include "entroute/log.hpp"
#include "jsonl.hpp"

namespace entroute {

using detail::json;

InstanceCost instance_cost(const InstanceRecord& record, Mode routed, bool enable_fallback,
                           std::size_t probe_length) {
  InstanceCost c;
  c.answer_tokens = record.outcome(routed).tokens;
  c.probe_tokens = routed == Mode::Standard ? 0 : static_cast<std::int64_t>(probe_length);
  c.fallback_tokens = (enable_fallback && routed != Mode::Direct) ? record.outcome(Mode::Direct).tokens : 0;
  c.total_tokens = c.answer_tokens + c.probe_tokens + c.fallback_tokens;
  return c;
}

bool instance_correct(const InstanceRecord& record, Mode routed, bool enable_fallback) {
  const bool own = record.outcome(routed).correct;
  if (enable_fallback && routed != Mode::Direct) return own || record.outcome(Mode::Direct).correct;
  return own;
}

Consistency consistency_ratio(std::span<const Mode> per_seed) {
  Consistency c;
  if (per_seed.empty()) {
    warn("consistency ratio over 0 seeds");
    return c;
  }
  for (Mode m : per_seed) {
    switch (m) {
      case Mode::Direct: ++c.direct; break;
      case Mode::Standard: ++c.standard; break;
      case Mode::CoT: ++c.cot; break;
    }
  }
  return c;
}

Consistency consistency_ratio(std::span<const RoutingDecision> per_seed) {
  std::vector<Mode> modes;
  modes.reserve(per_seed.size());
  for (const auto& d : per_seed) modes.push_back(d.mode);
  return consistency_ratio(modes);
}

const ReportEntry& EvaluationReport::dataset(const std::string& id) const {
  for (const auto& e : datasets) {
    if (e.dataset_id == id) return e;
  }
  throw ValidationError("report has no dataset '" + id + "'");
}

namespace {

// Accumulates in record order so sums do not depend on thread count or hashing.
struct Tally {
  std::size_t n = 0;
  std::size_t correct = 0;
  long double tokens = 0.0L;

  void add(bool ok, std::int64_t t) {
    ++n;
    correct += ok ? 1 : 0;
    tokens += static_cast<long double>(t);
  }

  ReportEntry entry(std::string dataset, std::string policy) const {
    ReportEntry e;
    e.dataset_id = std::move(dataset);
    e.policy = std::move(policy);
    e.instance_count = n;
    if (n > 0) {
      e.accuracy = static_cast<double>(correct) / static_cast<double>(n);
      e.avg_tokens = static_cast<double>(tokens / static_cast<long double>(n));
    }
    return e;
  }
};

std::vector<std::string> dataset_order(std::span<const InstanceRecord> records) {
  std::vector<std::string> order;
  std::set<std::string> seen;
  for (const auto& r : records) {
    if (seen.insert(r.dataset_id).second) order.push_back(r.dataset_id);
  }
  return order;
}

std::string list_ids(const std::vector<std::string>& ids) {
  std::string out;
  const std::size_t shown = std::min<std::size_t>(ids.size(), 20);
  for (std::size_t i = 0; i < shown; ++i) {
    if (i) out += ", ";
    out += ids[i];
  }
  if (ids.size() > shown) out += ", ... (" + std::to_string(ids.size()) + " total)";
  return out;
}

// Scores with a per-record chooser; returns the report with datasets in first-appearance order.
template <typename Fn>
EvaluationReport score_with(std::span<const InstanceRecord> records, std::string policy, Fn&& per_record) {
  const auto order = dataset_order(records);
  std::unordered_map<std::string, Tally> by_dataset;
  Tally overall;
  for (const auto& r : records) {
    const auto [ok, tokens] = per_record(r);
    by_dataset[r.dataset_id].add(ok, tokens);
    overall.add(ok, tokens);
  }
  EvaluationReport report;
  report.policy = policy;
  for (const auto& id : order) report.datasets.push_back(by_dataset[id].entry(id, policy));
  report.overall = overall.entry("overall", policy);
  return report;
}

}  // namespace

ReportEntry score_dataset_routing(std::span<const InstanceRecord> records, const RoutingDecision& decision) {
  Tally t;
  for (const auto& r : records) {
    if (r.dataset_id != decision.dataset_id) continue;
    const auto& o = r.outcome(decision.mode);
    t.add(o.correct, o.tokens);
  }
  if (t.n == 0) throw ValidationError("dataset '" + decision.dataset_id + "' has no records");
  return t.entry(decision.dataset_id, "global");
}

EvaluationReport score_dataset_routing(std::span<const InstanceRecord> records,
                                       std::span<const RoutingDecision> decisions) {
  std::map<std::string, Mode> chosen;
  for (const auto& d : decisions) {
    if (!chosen.emplace(d.dataset_id, d.mode).second) {
      throw ValidationError("more than one dataset-level decision for '" + d.dataset_id + "'");
    }
  }
  const auto order = dataset_order(records);
  std::vector<std::string> missing, unknown;
  for (const auto& id : order) {
    if (!chosen.contains(id)) missing.push_back(id);
  }
  const std::set<std::string> present(order.begin(), order.end());
  for (const auto& [id, mode] : chosen) {
    if (!present.contains(id)) unknown.push_back(id);
  }
  if (!missing.empty()) throw ValidationError("no decision for dataset(s): " + list_ids(missing));
  if (!unknown.empty()) throw ValidationError("decision for unknown dataset(s): " + list_ids(unknown));

  return score_with(records, "global", [&](const InstanceRecord& r) {
    const auto& o = r.outcome(chosen.at(r.dataset_id));
    return std::pair<bool, std::int64_t>{o.correct, o.tokens};
  });
}

EvaluationReport score_static(std::span<const InstanceRecord> records, Mode mode) {
  return score_with(records, std::string(to_string(mode)), [&](const InstanceRecord& r) {
    const auto& o = r.outcome(mode);
    return std::pair<bool, std::int64_t>{o.correct, o.tokens};
  });
}

EvaluationReport score_instance_routing(std::span<const InstanceRecord> records,
                                        std::span<const RoutingDecision> decisions, const RouterConfig& cfg,
                                        std::size_t probe_length) {
  std::map<std::pair<std::string, std::string>, Mode> chosen;
  for (const auto& d : decisions) {
    if (d.dataset_level()) throw ValidationError("instance-level scoring got a dataset-level decision");
    if (!chosen.emplace(std::pair{d.dataset_id, d.instance_id}, d.mode).second) {
      throw ValidationError("duplicate decision for instance '" + d.instance_id + "'");
    }
  }
  std::set<std::pair<std::string, std::string>> present;
  std::vector<std::string> missing, unknown;
  for (const auto& r : records) {
    present.emplace(r.dataset_id, r.instance_id);
    if (!chosen.contains({r.dataset_id, r.instance_id})) missing.push_back(r.dataset_id + "/" + r.instance_id);
  }
  for (const auto& [key, mode] : chosen) {
    if (!present.contains(key)) unknown.push_back(key.first + "/" + key.second);
  }
  if (!unknown.empty()) throw ValidationError("decision for unknown instance(s): " + list_ids(unknown));
  if (!missing.empty()) throw ValidationError("no decision for instance(s): " + list_ids(missing));

  return score_with(records, "instance", [&](const InstanceRecord& r) {
    const Mode m = chosen.at({r.dataset_id, r.instance_id});
    return std::pair<bool, std::int64_t>{instance_correct(r, m, cfg.enable_fallback),
                                         instance_cost(r, m, cfg.enable_fallback, probe_length).total_tokens};
  });
}

EvaluationReport average_reports(std::span<const EvaluationReport> per_seed) {
  if (per_seed.empty()) throw ValidationError("no reports to average");
  EvaluationReport out = per_seed.front();
  const auto k = static_cast<long double>(per_seed.size());
  auto average = [&](auto&& pick) {
    long double acc = 0.0L, tok = 0.0L;
    for (const auto& rep : per_seed) {
      const ReportEntry& e = pick(rep);
      acc += e.accuracy;
      tok += e.avg_tokens;
    }
    return std::pair<double, double>{static_cast<double>(acc / k), static_cast<double>(tok / k)};
  };
  for (std::size_t i = 0; i < out.datasets.size(); ++i) {
    for (const auto& rep : per_seed) {
      if (rep.datasets.size() != out.datasets.size() || rep.datasets[i].dataset_id != out.datasets[i].dataset_id) {
        throw ValidationError("per-seed reports cover different datasets");
      }
    }
    std::tie(out.datasets[i].accuracy, out.datasets[i].avg_tokens) =
        average([i](const EvaluationReport& r) -> const ReportEntry& { return r.datasets[i]; });
  }
  std::tie(out.overall.accuracy, out.overall.avg_tokens) =
      average([](const EvaluationReport& r) -> const ReportEntry& { return r.overall; });
  return out;
}

void UnifiedGainConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ValidationError("lambda must be >= 0");
  if (!(token_scale > 0.0) || !std::isfinite(token_scale)) throw ValidationError("token_scale must be > 0");
}

double unified_utility(const InstanceRecord& record, Mode mode, const UnifiedGainConfig& cfg) {
  const auto& o = record.outcome(mode);
  return (o.correct ? 1.0 : 0.0) - cfg.lambda * static_cast<double>(o.tokens) / cfg.token_scale;
}

double unified_gain(const InstanceRecord& record, Mode a, Mode b, const UnifiedGainConfig& cfg) {
  return unified_utility(record, a, cfg) - unified_utility(record, b, cfg);
}

void GridSpec::validate() const {
  auto check_edges = [](const std::vector<double>& e, const char* axis) {
    if (e.size() < 2) throw ValidationError(std::string(axis) + " edges need at least 2 values");
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (!std::isfinite(e[i])) throw ValidationError(std::string(axis) + " edges must be finite");
      if (i > 0 && !(e[i] > e[i - 1])) throw ValidationError(std::string(axis) + " edges must strictly increase");
    }
  };
  if (x_edges.empty()) {
    if (x_bins == 0) throw ValidationError("heatmap grid has no x bins");
  } else {
    check_edges(x_edges, "x");
  }
  if (y_edges.empty()) {
    if (y_bins == 0) throw ValidationError("heatmap grid has no y bins");
  } else {
    check_edges(y_edges, "y");
  }
  if (!(vnr_floor >= 0.0)) throw ValidationError("vnr_floor must be >= 0");
}

std::size_t HeatmapGrid::binned_count() const noexcept {
  std::size_t n = 0;
  for (const auto& c : cells) n += c.count;
  return n;
}

namespace {

std::vector<double> uniform_edges(double lo, double hi, std::size_t bins) {
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  std::vector<double> edges(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  }
  edges.back() = hi;
  return edges;
}

// Index of the half-open bin [e_i, e_{i+1}) holding v; the last bin is closed on the right.
std::optional<std::size_t> bin_of(const std::vector<double>& edges, double v) {
  if (!(v >= edges.front() && v <= edges.back())) return std::nullopt;
  if (v == edges.back()) return edges.size() - 2;
  auto it = std::upper_bound(edges.begin(), edges.end(), v);
  return static_cast<std::size_t>(it - edges.begin()) - 1;
}

}  // namespace

HeatmapGrid build_heatmap(std::span<const InstanceRecord> records, const GridSpec& grid,
                          const UnifiedGainConfig& ug_cfg, const DescriptorConfig& desc_cfg) {
  grid.validate();
  ug_cfg.validate();
  desc_cfg.validate();

  struct Point {
    double x, y, gain;
  };
  HeatmapGrid out;
  std::vector<Point> points;
  for (const auto& r : records) {
    if (!r.trace) {
      ++out.skipped_count;
      continue;
    }
    const auto result = extract_descriptors(*r.trace, desc_cfg);
    const auto* d = std::get_if<Descriptors>(&result);
    if (d == nullptr) {
      ++out.skipped_count;
      continue;
    }
    if (d->a_vnr < grid.vnr_floor || d->a_vnr == 0.0) {
      ++out.low_vnr_count;
      continue;
    }
    points.push_back({d->v_sp / d->a_vnr, d->s_h, unified_gain(r, Mode::CoT, Mode::Direct, ug_cfg)});
  }

  auto observed = [&](auto member) {
    if (points.empty()) return std::pair{0.0, 1.0};
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& p : points) {
      lo = std::min(lo, p.*member);
      hi = std::max(hi, p.*member);
    }
    return std::pair{lo, hi};
  };
  if (grid.x_edges.empty()) {
    const auto [lo, hi] = observed(&Point::x);
    out.x_edges = uniform_edges(lo, hi, grid.x_bins);
  } else {
    out.x_edges = grid.x_edges;
  }
  if (grid.y_edges.empty()) {
    const auto [lo, hi] = observed(&Point::y);
    out.y_edges = uniform_edges(lo, hi, grid.y_bins);
  } else {
    out.y_edges = grid.y_edges;
  }

  const std::size_t nx = out.x_bins(), ny = out.y_bins();
  std::vector<long double> sums(nx * ny, 0.0L);
  std::vector<std::size_t> counts(nx * ny, 0);
  for (const auto& p : points) {
    const auto ix = bin_of(out.x_edges, p.x);
    const auto iy = bin_of(out.y_edges, p.y);
    if (!ix || !iy) {
      ++out.out_of_range_count;
      continue;
    }
    sums[*iy * nx + *ix] += p.gain;
    ++counts[*iy * nx + *ix];
  }

  out.cells.reserve(nx * ny);
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const std::size_t k = iy * nx + ix;
      HeatmapCell c{out.x_edges[ix], out.x_edges[ix + 1], out.y_edges[iy], out.y_edges[iy + 1],
                    std::numeric_limits<double>::quiet_NaN(), counts[k]};
      if (counts[k] > 0) c.mean_delta_u = static_cast<double>(sums[k] / static_cast<long double>(counts[k]));
      out.cells.push_back(c);
    }
  }
  return out;
}

namespace {

json entry_json(const ReportEntry& e) {
  json j{{"dataset", e.dataset_id},
         {"policy", e.policy},
         {"accuracy", e.accuracy},
         {"avg_tokens", e.avg_tokens},
         {"instance_count", e.instance_count}};
  if (e.consistency) {
    j["consistency"] = {{"d", e.consistency->direct}, {"s", e.consistency->standard}, {"c", e.consistency->cot}};
  }
  return j;
}

void csv_row(std::ostream& out, const ReportEntry& e) {
  out << e.dataset_id << ',' << e.policy << ',' << detail::format_double(e.accuracy) << ','
      << detail::format_double(e.avg_tokens) << ',';
  if (e.consistency) {
    out << e.consistency->direct << ',' << e.consistency->standard << ',' << e.consistency->cot;
  } else {
    out << ",,";
  }
  out << '\n';
}

}  // namespace

void write_report_json(std::ostream& out, std::span<const EvaluationReport> reports) {
  json doc;
  doc["reports"] = json::array();
  for (const auto& r : reports) {
    json jr;
    jr["policy"] = r.policy;
    jr["datasets"] = json::array();
    for (const auto& e : r.datasets) jr["datasets"].push_back(entry_json(e));
    jr["overall"] = entry_json(r.overall);
    doc["reports"].push_back(std::move(jr));
  }
  out << doc.dump(2) << '\n';
}

void write_report_csv(std::ostream& out, std::span<const EvaluationReport> reports) {
  out << "dataset,mode_or_policy,accuracy,avg_tokens,d,s,c\n";
  for (const auto& r : reports) {
    for (const auto& e : r.datasets) csv_row(out, e);
    csv_row(out, r.overall);
  }
}

void write_heatmap_csv(std::ostream& out, const HeatmapGrid& grid) {
  out << "x_lo,x_hi,y_lo,y_hi,mean_delta_u,count\n";
  for (const auto& c : grid.cells) {
    out << detail::format_double(c.x_lo) << ',' << detail::format_double(c.x_hi) << ','
        << detail::format_double(c.y_lo) << ',' << detail::format_double(c.y_hi) << ','
        << detail::format_double(c.mean_delta_u) << ',' << c.count << '\n';
  }
}

void write_heatmap_summary(std::ostream& out, const HeatmapGrid& grid, const UnifiedGainConfig& ug_cfg) {
  json j{{"lambda", ug_cfg.lambda},
         {"token_scale", ug_cfg.token_scale},
         {"x_axis", "v_sp/a_vnr"},
         {"y_axis", "s_h"},
         {"x_edges", grid.x_edges},
         {"y_edges", grid.y_edges},
         {"binned_count", grid.binned_count()},
         {"overflow_low_vnr", grid.low_vnr_count},
         {"overflow_out_of_range", grid.out_of_range_count},
         {"skipped", grid.skipped_count}};
  out << j.dump(2) << '\n';
}

}  // namespace entroute
