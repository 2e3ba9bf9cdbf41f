#include "entroute/trace_model.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <utility>

#include "entroute/errors.hpp"
#include "jsonl.hpp"

namespace entroute {

using detail::json;

TraceFormat parse_trace_format(std::string_view text) {
  if (text == "entropies" || text == "jsonl") return TraceFormat::Entropies;
  if (text == "distributions") return TraceFormat::Distributions;
  throw ValidationError("unknown trace format '" + std::string(text) + "'");
}

double token_entropy(const TokenDistribution& dist, const EntropyOptions& opts) {
  long double h = 0.0L;
  for (double p : dist.probabilities()) {
    if (p > 0.0) h -= static_cast<long double>(p) * std::log(static_cast<long double>(p));
  }
  const double r = dist.residual_mass();
  if (dist.truncated() && opts.include_residual && r > 0.0) {
    h -= static_cast<long double>(r) * std::log(static_cast<long double>(r));
  }
  // -p log p is non-negative term by term; clamp the -0.0 that a lone p=1 produces.
  return h > 0.0L ? static_cast<double>(h) : 0.0;
}

namespace {

TokenDistribution distribution_from_probs(std::vector<double> probs, bool truncated) {
  if (!truncated) return TokenDistribution(std::move(probs), false, 0.0);
  double sum = 0.0;
  for (double p : probs) sum += p;
  if (sum > 1.0) {
    if (sum > 1.0 + 1e-6) throw ValidationError("truncated distribution has mass above 1");
    return TokenDistribution(std::move(probs), true, 0.0);
  }
  return TokenDistribution(std::move(probs), true, 1.0 - sum);
}

EntropyTrace trace_from_json(const json& j, TraceFormat format, const EntropyOptions& opts) {
  auto instance_id = detail::require_string(j, "instance_id");
  auto dataset_id = detail::require_string(j, "dataset_id");
  const std::int64_t n = detail::require_integer(j, "probe_length");
  if (n < 1) throw ValidationError("probe_length must be >= 1");
  bool approximate = j.value("approximate", false);

  std::vector<double> values;
  if (format == TraceFormat::Entropies) {
    values = detail::require_numbers(j, "entropies");
  } else {
    const json& steps = detail::require(j, "distributions");
    if (!steps.is_array()) throw detail::FieldError("field 'distributions' must be an array");
    const bool truncated = j.value("truncated", false);
    approximate = approximate || (truncated && opts.include_residual);
    for (const json& step : steps) {
      if (!step.is_array()) throw detail::FieldError("each distribution must be an array");
      auto probs = step.get<std::vector<double>>();
      values.push_back(token_entropy(distribution_from_probs(std::move(probs), truncated), opts));
    }
  }
  return EntropyTrace(std::move(instance_id), std::move(dataset_id), static_cast<std::size_t>(n),
                      std::move(values), approximate);
}

json trace_fields(const EntropyTrace& t) {
  json j;
  j["instance_id"] = t.instance_id();
  j["dataset_id"] = t.dataset_id();
  j["probe_length"] = t.probe_length();
  j["entropies"] = t.values();
  if (t.approximate()) j["approximate"] = true;
  return j;
}

ModeOutcome outcome_from_json(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ValidationError(std::string("record is missing mode '") + key + "'");
  const json& o = *it;
  if (!o.is_object()) throw detail::FieldError(std::string("mode '") + key + "' must be an object");
  const json& c = detail::require(o, "correct");
  ModeOutcome out;
  if (c.is_boolean()) {
    out.correct = c.get<bool>();
  } else if (c.is_number_integer() && (c.get<int>() == 0 || c.get<int>() == 1)) {
    out.correct = c.get<int>() == 1;
  } else {
    throw ValidationError(std::string("mode '") + key + "': correct must be 0 or 1");
  }
  out.tokens = detail::require_integer(o, "tokens");
  if (out.tokens < 0) throw ValidationError(std::string("mode '") + key + "': tokens must be >= 0");
  return out;
}

json outcome_json(const ModeOutcome& o) { return json{{"correct", o.correct ? 1 : 0}, {"tokens", o.tokens}}; }

}  // namespace

std::vector<EntropyTrace> read_traces(std::istream& in, const std::string& source, TraceFormat format,
                                      const EntropyOptions& opts) {
  std::vector<EntropyTrace> traces;
  detail::for_each_json_line(in, source, [&](const json& j, std::size_t) {
    traces.push_back(trace_from_json(j, format, opts));
  });
  return traces;
}

std::vector<EntropyTrace> load_traces(const std::filesystem::path& path, TraceFormat format,
                                      const EntropyOptions& opts) {
  auto in = detail::open_input(path);
  return read_traces(in, path.string(), format, opts);
}

void write_traces(std::ostream& out, std::span<const EntropyTrace> traces) {
  for (const auto& t : traces) out << trace_fields(t).dump() << '\n';
}

void save_traces(const std::filesystem::path& path, std::span<const EntropyTrace> traces) {
  auto out = detail::open_output(path);
  write_traces(out, traces);
}

void validate_records(std::span<const InstanceRecord> records) {
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& r : records) {
    for (const auto& o : r.outcomes) {
      if (o.tokens < 0) throw ValidationError("record '" + r.instance_id + "' has negative token count");
    }
    if (!seen.emplace(r.dataset_id, r.instance_id).second) {
      throw ValidationError("duplicate instance_id '" + r.instance_id + "' in dataset '" + r.dataset_id + "'");
    }
  }
}

std::vector<InstanceRecord> read_instance_records(std::istream& in, const std::string& source) {
  std::vector<InstanceRecord> records;
  std::set<std::pair<std::string, std::string>> seen;
  detail::for_each_json_line(in, source, [&](const json& j, std::size_t) {
    InstanceRecord r;
    r.instance_id = detail::require_string(j, "instance_id");
    r.dataset_id = detail::require_string(j, "dataset_id");
    r.outcome(Mode::Direct) = outcome_from_json(j, "direct");
    r.outcome(Mode::Standard) = outcome_from_json(j, "standard");
    r.outcome(Mode::CoT) = outcome_from_json(j, "cot");
    if (j.contains("entropies")) r.trace = trace_from_json(j, TraceFormat::Entropies, {});
    if (!seen.emplace(r.dataset_id, r.instance_id).second) {
      throw ValidationError("duplicate instance_id '" + r.instance_id + "' in dataset '" + r.dataset_id + "'");
    }
    records.push_back(std::move(r));
  });
  return records;
}

std::vector<InstanceRecord> load_instance_records(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return read_instance_records(in, path.string());
}

void write_instance_records(std::ostream& out, std::span<const InstanceRecord> records) {
  for (const auto& r : records) {
    json j;
    j["instance_id"] = r.instance_id;
    j["dataset_id"] = r.dataset_id;
    j["direct"] = outcome_json(r.outcome(Mode::Direct));
    j["standard"] = outcome_json(r.outcome(Mode::Standard));
    j["cot"] = outcome_json(r.outcome(Mode::CoT));
    if (r.trace) {
      j["probe_length"] = r.trace->probe_length();
      j["entropies"] = r.trace->values();
      if (r.trace->approximate()) j["approximate"] = true;
    }
    out << j.dump() << '\n';
  }
}

void save_instance_records(const std::filesystem::path& path, std::span<const InstanceRecord> records) {
  auto out = detail::open_output(path);
  write_instance_records(out, records);
}

std::vector<RoutingDecision> read_decisions(std::istream& in, const std::string& source) {
  std::vector<RoutingDecision> decisions;
  detail::for_each_json_line(in, source, [&](const json& j, std::size_t) {
    RoutingDecision d;
    d.dataset_id = detail::require_string(j, "dataset_id");
    d.instance_id = j.value("instance_id", std::string{});
    d.mode = parse_mode(detail::require_string(j, "mode"));
    d.reason = parse_reason(j.value("reason", std::string{"default_standard"}));
    if (j.contains("s_h")) {
      d.descriptors = Descriptors{detail::require_number(j, "s_h"), detail::require_number(j, "v_sp"),
                                  detail::require_number(j, "a_vnr")};
    }
    validate(d);
    decisions.push_back(std::move(d));
  });
  return decisions;
}

std::vector<RoutingDecision> load_decisions(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return read_decisions(in, path.string());
}

void write_decisions(std::ostream& out, std::span<const RoutingDecision> decisions) {
  for (const auto& d : decisions) {
    json j;
    j["dataset_id"] = d.dataset_id;
    if (!d.instance_id.empty()) j["instance_id"] = d.instance_id;
    j["mode"] = to_string(d.mode);
    j["reason"] = to_string(d.reason);
    if (d.descriptors) {
      j["s_h"] = d.descriptors->s_h;
      j["v_sp"] = d.descriptors->v_sp;
      j["a_vnr"] = d.descriptors->a_vnr;
    }
    out << j.dump() << '\n';
  }
}

void save_decisions(const std::filesystem::path& path, std::span<const RoutingDecision> decisions) {
  auto out = detail::open_output(path);
  write_decisions(out, decisions);
}

}  // namespace entroute
