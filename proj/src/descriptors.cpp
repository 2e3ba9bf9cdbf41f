#include "entroute/descriptors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "entroute/errors.hpp"
#include "jsonl.hpp"

namespace entroute {

using detail::json;

void DescriptorConfig::validate() const {
  if (!(epsilon > 0.0)) throw ValidationError("epsilon must be > 0");
  if (probe_length < 2) throw ValidationError("probe_length must be >= 2");
}

double cumulative_entropy(std::span<const double> values) {
  long double sum = 0.0L;
  for (double v : values) sum += v;
  return static_cast<double>(sum);
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // positions i..j-1 hold ranks i+1..j
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
    i = j;
  }
  return ranks;
}

namespace {

void require_length(std::size_t n) {
  if (n < 2) throw ValidationError("sequence needs at least 2 values, got " + std::to_string(n));
}

bool is_constant(std::span<const double> values) {
  return std::adjacent_find(values.begin(), values.end(), std::not_equal_to<>()) == values.end();
}

void require_complete(const EntropyTrace& trace) {
  if (trace.terminated_early()) {
    throw EarlyStopError("trace '" + trace.instance_id() + "' stopped after " +
                         std::to_string(trace.values().size()) + " of " + std::to_string(trace.probe_length()) +
                         " steps; route Standard");
  }
}

}  // namespace

double spearman_trend(std::span<const double> values) {
  const std::size_t n = values.size();
  require_length(n);
  if (is_constant(values)) return 0.0;

  const std::vector<double> ranks = average_ranks(values);
  // Both the step indices and the ranks have mean (N+1)/2.
  const long double mean = 0.5L * static_cast<long double>(n + 1);
  long double cov = 0.0L, var_idx = 0.0L, var_rank = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    const long double di = static_cast<long double>(i + 1) - mean;
    const long double dr = static_cast<long double>(ranks[i]) - mean;
    cov += di * dr;
    var_idx += di * di;
    var_rank += dr * dr;
  }
  if (var_rank == 0.0L) return 0.0;
  const double rho = static_cast<double>(cov / std::sqrt(var_idx * var_rank));
  return std::clamp(rho, -1.0, 1.0);
}

double von_neumann_ratio(std::span<const double> values, double epsilon) {
  const std::size_t n = values.size();
  require_length(n);
  if (is_constant(values)) return 0.0;

  long double sum = 0.0L;
  for (double v : values) sum += v;
  const long double mean = sum / static_cast<long double>(n);
  long double ss = 0.0L;
  for (double v : values) ss += (v - mean) * (v - mean);
  const long double variance = ss / static_cast<long double>(n);
  if (variance == 0.0L) return 0.0;

  long double sq_diff = 0.0L;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const long double d = static_cast<long double>(values[i + 1]) - values[i];
    sq_diff += d * d;
  }
  const long double msd = sq_diff / static_cast<long double>(n - 1);
  return static_cast<double>(msd / (variance + epsilon));
}

Descriptors compute_descriptors(std::span<const double> values, double epsilon) {
  return Descriptors{cumulative_entropy(values), spearman_trend(values), von_neumann_ratio(values, epsilon)};
}

double cumulative_entropy(const EntropyTrace& trace) {
  require_complete(trace);
  return cumulative_entropy(std::span<const double>(trace.values()));
}

double spearman_trend(const EntropyTrace& trace) {
  require_complete(trace);
  return spearman_trend(std::span<const double>(trace.values()));
}

double von_neumann_ratio(const EntropyTrace& trace, const DescriptorConfig& cfg) {
  cfg.validate();
  require_complete(trace);
  return von_neumann_ratio(std::span<const double>(trace.values()), cfg.epsilon);
}

DescriptorResult extract_descriptors(const EntropyTrace& trace, const DescriptorConfig& cfg) {
  cfg.validate();
  if (trace.terminated_early()) return EarlyStop{};
  return compute_descriptors(trace.values(), cfg.epsilon);
}

std::vector<DescriptorRecord> read_descriptor_records(std::istream& in, const std::string& source) {
  std::vector<DescriptorRecord> out;
  detail::for_each_json_line(in, source, [&](const json& j, std::size_t) {
    DescriptorRecord r{detail::require_string(j, "instance_id"), detail::require_string(j, "dataset_id"),
                       EarlyStop{}};
    if (!j.value("early_stop", false)) {
      Descriptors d{detail::require_number(j, "s_h"), detail::require_number(j, "v_sp"),
                    detail::require_number(j, "a_vnr")};
      if (d.s_h < 0.0 || d.a_vnr < 0.0 || d.v_sp < -1.0 || d.v_sp > 1.0) {
        throw ValidationError("descriptor values out of range for '" + r.instance_id + "'");
      }
      r.result = d;
    }
    out.push_back(std::move(r));
  });
  return out;
}

std::vector<DescriptorRecord> load_descriptor_records(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return read_descriptor_records(in, path.string());
}

void write_descriptor_records(std::ostream& out, std::span<const DescriptorRecord> records) {
  for (const auto& r : records) {
    json j;
    j["instance_id"] = r.instance_id;
    j["dataset_id"] = r.dataset_id;
    if (const auto* d = std::get_if<Descriptors>(&r.result)) {
      j["s_h"] = d->s_h;
      j["v_sp"] = d->v_sp;
      j["a_vnr"] = d->a_vnr;
    } else {
      j["early_stop"] = true;
    }
    out << j.dump() << '\n';
  }
}

}  // namespace entroute
