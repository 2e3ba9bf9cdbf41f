#include "entroute/cli.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <set>

#include "CLI11.hpp"
#include "entroute/config.hpp"
#include "entroute/descriptors.hpp"
#include "entroute/errors.hpp"
#include "entroute/evaluation.hpp"
#include "entroute/heuristic_router.hpp"
#include "entroute/learned_router.hpp"
#include "entroute/log.hpp"
#include "entroute/probe_client.hpp"
#include "entroute/rng.hpp"
#include "entroute/trace_model.hpp"
#include "jsonl.hpp"

#ifndef ENTROUTE_VERSION
#define ENTROUTE_VERSION "0.0.0"
#endif

namespace entroute {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::string tool_version() { return ENTROUTE_VERSION; }

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("SHA-256 init failed");
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0 && EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount())) != 1) {
      throw Error("SHA-256 update failed");
    }
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) throw Error("SHA-256 final failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 0xF];
  }
  return hex;
}

ojson RunManifest::to_json() const {
  ojson j;
  j["command"] = command;
  j["arguments"] = arguments;
  j["config"] = config;
  j["inputs"] = ojson::array();
  for (const auto& [path, digest] : inputs) j["inputs"].push_back({{"path", path}, {"sha256", digest}});
  j["outputs"] = outputs;
  j["seeds"] = seeds;
  j["version"] = version;
  j["timestamp"] = timestamp;
  return j;
}

void write_manifest(const fs::path& path, const RunManifest& manifest) {
  auto out = detail::open_output(path);
  out << manifest.to_json().dump(2) << '\n';
}

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Options shared by every subcommand that reads settings.
struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::optional<double> k;
  std::optional<double> s_h_threshold;
  std::optional<double> epsilon;
  std::optional<std::size_t> probe_length;
  bool no_fallback = false;
  bool no_guardrail = false;
  bool no_volatility = false;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "key = value settings file")->check(CLI::ExistingFile);
  sub->add_option("--set", c.sets, "override one setting, key=value (repeatable)");
  sub->add_option("--k", c.k, "trend-vs-volatility coupling k");
  sub->add_option("--s-h-threshold", c.s_h_threshold, "uncertainty-overload threshold on S_H");
  sub->add_option("--epsilon", c.epsilon, "variance guard in a_vnr");
  sub->add_option("--probe-length", c.probe_length, "probe length N");
  sub->add_flag("--no-fallback", c.no_fallback, "disable Direct fallback compensation");
  sub->add_flag("--no-s-h-guardrail", c.no_guardrail, "drop the uncertainty-overload clause");
  sub->add_flag("--no-volatility", c.no_volatility, "compare V_sp with +-k instead of +-k*a_vnr");
}

Settings resolve_settings(const Common& c) {
  Settings s;
  if (!c.config.empty()) load_settings(c.config, s);
  if (c.k) s.router.k = *c.k;
  if (c.s_h_threshold) s.router.s_h_threshold = *c.s_h_threshold;
  if (c.epsilon) s.descriptor.epsilon = *c.epsilon;
  if (c.probe_length) {
    s.descriptor.probe_length = *c.probe_length;
    s.probe.probe_length = *c.probe_length;
  }
  if (c.no_fallback) s.router.enable_fallback = false;
  if (c.no_guardrail) s.router.use_s_h_guardrail = false;
  if (c.no_volatility) s.router.use_volatility = false;
  for (const auto& kv : c.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ValidationError("--set expects key=value, got '" + kv + "'");
    apply_setting(s, kv.substr(0, eq), kv.substr(eq + 1));
  }
  s.validate();
  return s;
}

/// Collects provenance while a command runs.
class Run {
 public:
  Run(std::string command, std::vector<std::string> args, const Settings& s) {
    m_.command = std::move(command);
    m_.arguments = std::move(args);
    m_.config = settings_json(s);
    m_.version = tool_version();
  }

  void input(const fs::path& p) {
    if (!p.empty()) m_.inputs.emplace_back(p.string(), sha256_file(p));
  }
  void output(const fs::path& p) { m_.outputs.push_back(p.string()); }
  void seeds(std::vector<std::uint64_t> s) { m_.seeds = std::move(s); }

  void finish(const fs::path& manifest_path) {
    m_.timestamp = utc_now();
    write_manifest(manifest_path, m_);
  }

 private:
  RunManifest m_;
};

fs::path manifest_for(const fs::path& out) { return fs::path(out.string() + ".manifest.json"); }

std::vector<DescriptorRecord> descriptors_of(const std::vector<EntropyTrace>& traces, const DescriptorConfig& cfg) {
  std::vector<DescriptorRecord> out;
  out.reserve(traces.size());
  for (const auto& t : traces) out.push_back({t.instance_id(), t.dataset_id(), extract_descriptors(t, cfg)});
  return out;
}

struct DescriptorInput {
  std::string traces;
  std::string descriptors;
  std::string format = "entropies";
  bool no_residual = false;
};

void add_descriptor_input(CLI::App* sub, DescriptorInput& in) {
  auto* t = sub->add_option("--traces", in.traces, "entropy trace JSONL")->check(CLI::ExistingFile);
  auto* d = sub->add_option("--descriptors", in.descriptors, "descriptor JSONL from 'extract'")->check(CLI::ExistingFile);
  t->excludes(d);
  sub->add_option("--format", in.format, "trace format: entropies | distributions");
  sub->add_flag("--no-residual", in.no_residual, "ignore residual mass of truncated distributions");
}

std::vector<DescriptorRecord> load_descriptor_input(const DescriptorInput& in, const Settings& s, Run& run) {
  if (!in.traces.empty()) {
    run.input(in.traces);
    const auto traces =
        load_traces(in.traces, parse_trace_format(in.format), EntropyOptions{!in.no_residual});
    return descriptors_of(traces, s.descriptor);
  }
  if (!in.descriptors.empty()) {
    run.input(in.descriptors);
    return load_descriptor_records(in.descriptors);
  }
  throw ValidationError("one of --traces or --descriptors is required");
}

/// Dataset ids in first-appearance order with their records sorted by instance id.
std::vector<std::pair<std::string, std::vector<const DescriptorRecord*>>> group_by_dataset(
    const std::vector<DescriptorRecord>& records) {
  std::vector<std::pair<std::string, std::vector<const DescriptorRecord*>>> groups;
  std::map<std::string, std::size_t> index;
  for (const auto& r : records) {
    auto [it, inserted] = index.emplace(r.dataset_id, groups.size());
    if (inserted) groups.push_back({r.dataset_id, {}});
    groups[it->second].second.push_back(&r);
  }
  for (auto& [id, members] : groups) {
    std::stable_sort(members.begin(), members.end(),
                     [](const DescriptorRecord* a, const DescriptorRecord* b) { return a->instance_id < b->instance_id; });
  }
  return groups;
}

/// Per-dataset descriptor results, subsampled to `n` per dataset (0 keeps all).
std::vector<std::pair<std::string, std::vector<DescriptorResult>>> sample_datasets(
    const std::vector<DescriptorRecord>& records, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::pair<std::string, std::vector<DescriptorResult>>> out;
  for (const auto& [id, members] : group_by_dataset(records)) {
    std::vector<std::size_t> idx(members.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (n > 0 && members.size() < n) {
      warn("dataset '" + id + "' has " + std::to_string(members.size()) + " instance(s), fewer than the sample size " +
           std::to_string(n) + "; using all");
    } else if (n > 0 && members.size() > n) {
      rng.shuffle(std::span<std::size_t>(idx));
      idx.resize(n);
      std::sort(idx.begin(), idx.end());
    }
    std::vector<DescriptorResult> results;
    results.reserve(idx.size());
    for (std::size_t i : idx) results.push_back(members[i]->result);
    out.emplace_back(id, std::move(results));
  }
  return out;
}

std::vector<RoutingDecision> global_decisions(const std::vector<DescriptorRecord>& records, std::size_t sample_size,
                                              std::uint64_t seed, const RouterConfig& cfg) {
  std::vector<RoutingDecision> out;
  for (const auto& [id, results] : sample_datasets(records, sample_size, seed)) {
    try {
      out.push_back(route_dataset(dataset_stats(id, results), cfg));
    } catch (const ValidationError& e) {
      warn(std::string(e.what()) + "; routing the dataset to Standard");
      RoutingDecision d;
      d.dataset_id = id;
      d.mode = Mode::Standard;
      d.reason = RoutingReason::EarlyStop;
      out.push_back(std::move(d));
    }
  }
  return out;
}

/// Attaches probe traces to records by (dataset_id, instance_id); an attached trace
/// replaces any trace carried by the record itself.
void attach_traces(std::vector<InstanceRecord>& records, const std::string& traces_path, Run& run) {
  if (traces_path.empty()) return;
  run.input(traces_path);
  std::map<std::pair<std::string, std::string>, EntropyTrace> by_id;
  for (auto& t : load_traces(traces_path)) {
    by_id.emplace(std::pair{t.dataset_id(), t.instance_id()}, std::move(t));
  }
  std::size_t missing = 0;
  for (auto& r : records) {
    const auto it = by_id.find({r.dataset_id, r.instance_id});
    if (it != by_id.end()) {
      r.trace = it->second;
    } else if (!r.trace) {
      ++missing;
    }
  }
  if (missing > 0) warn(std::to_string(missing) + " record(s) have no matching trace in '" + traces_path + "'");
}

void write_lines(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  auto out = detail::open_output(path);
  body(out);
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

// ---------------------------------------------------------------- commands

struct ExtractOpts {
  Common common;
  DescriptorInput input;
  std::string out;
};

int cmd_extract(const ExtractOpts& o, const std::vector<std::string>& args, std::ostream& msg) {
  const Settings s = resolve_settings(o.common);
  Run run("extract", args, s);
  if (o.input.traces.empty()) throw ValidationError("extract needs --traces");
  const auto records = load_descriptor_input(o.input, s, run);
  if (records.empty()) warn("no traces in '" + o.input.traces + "'");
  write_lines(o.out, [&](std::ostream& out) { write_descriptor_records(out, records); });
  run.output(o.out);
  run.finish(manifest_for(o.out));
  const auto early = std::count_if(records.begin(), records.end(),
                                   [](const DescriptorRecord& r) { return is_early_stop(r.result); });
  msg << "wrote " << records.size() << " descriptor record(s), " << early << " early stop, to " << o.out << '\n';
  return kExitOk;
}

struct RouteOpts {
  Common common;
  DescriptorInput input;
  std::string level = "global";
  std::size_t sample_size = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds;
  bool default_seeds = false;
  std::string out;
};

int cmd_route(const RouteOpts& o, const std::vector<std::string>& args, std::ostream& msg) {
  const Settings s = resolve_settings(o.common);
  Run run("route", args, s);
  const auto records = load_descriptor_input(o.input, s, run);

  if (o.level == "instance") {
    if (o.sample_size > 0) warn("--sample-size is ignored for instance-level routing");
    std::vector<RoutingDecision> decisions;
    decisions.reserve(records.size());
    for (const auto& r : records) {
      RoutingDecision d = route(r.result, s.router);
      d.instance_id = r.instance_id;
      d.dataset_id = r.dataset_id;
      decisions.push_back(std::move(d));
    }
    save_decisions(o.out, decisions);
    run.output(o.out);
    run.finish(manifest_for(o.out));
    std::array<std::size_t, 3> counts{};
    for (const auto& d : decisions) ++counts[index_of(d.mode)];
    msg << "routed " << decisions.size() << " instance(s): direct " << counts[0] << ", standard " << counts[1]
        << ", cot " << counts[2] << '\n';
    return kExitOk;
  }
  if (o.level != "global") throw ValidationError("--level must be global or instance");

  std::vector<std::uint64_t> seeds = o.default_seeds ? kDefaultSeeds : o.seeds;
  if (seeds.empty()) seeds.push_back(o.seed);
  run.seeds(seeds);

  if (seeds.size() == 1) {
    const auto decisions = global_decisions(records, o.sample_size, seeds.front(), s.router);
    save_decisions(o.out, decisions);
    run.output(o.out);
    run.finish(manifest_for(o.out));
    for (const auto& d : decisions) msg << d.dataset_id << ": " << to_string(d.mode) << " (" << to_string(d.reason) << ")\n";
    return kExitOk;
  }

  const fs::path dir(o.out);
  fs::create_directories(dir);
  std::map<std::string, std::vector<Mode>> per_dataset;
  std::vector<std::string> order;
  for (std::uint64_t seed : seeds) {
    const auto decisions = global_decisions(records, o.sample_size, seed, s.router);
    const fs::path path = dir / ("decisions_seed" + std::to_string(seed) + ".jsonl");
    save_decisions(path, decisions);
    run.output(path);
    for (const auto& d : decisions) {
      if (!per_dataset.contains(d.dataset_id)) order.push_back(d.dataset_id);
      per_dataset[d.dataset_id].push_back(d.mode);
    }
  }
  run.finish(dir / "manifest.json");
  for (const auto& id : order) {
    const Consistency c = consistency_ratio(per_dataset[id]);
    msg << id << ": D:S:C = " << c.direct << ':' << c.standard << ':' << c.cot << '\n';
  }
  return kExitOk;
}

struct CalibrateOpts {
  Common common;
  DescriptorInput input;
  std::size_t sample_size = 50;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_calibrate(const CalibrateOpts& o, const std::vector<std::string>& args, std::ostream& msg) {
  Settings s = resolve_settings(o.common);
  Run run("calibrate", args, s);
  run.seeds({o.seed});
  const auto records = load_descriptor_input(o.input, s, run);
  std::vector<DatasetStats> stats;
  for (const auto& [id, results] : sample_datasets(records, o.sample_size, o.seed)) {
    try {
      stats.push_back(dataset_stats(id, results));
    } catch (const ValidationError& e) {
      warn(std::string(e.what()) + "; excluded from calibration");
    }
  }
  if (stats.empty()) throw ValidationError("no dataset has usable probes");
  s.router.s_h_threshold = calibrate_threshold(stats);
  save_settings(o.out, s);
  run.output(o.out);
  run.finish(manifest_for(o.out));
  for (const auto& st : stats) {
    msg << st.dataset_id << ": mean S_H " << detail::format_double(st.mean_s_h) << ", mean V_sp "
        << detail::format_double(st.mean_v_sp) << " (" << st.sample_count << " probes)\n";
  }
  msg << "s_h_threshold = " << detail::format_double(s.router.s_h_threshold) << '\n';
  return kExitOk;
}

struct EvalOpts {
  Common common;
  std::string records;
  std::vector<std::string> decisions;
  std::string out;
};

int cmd_eval(const EvalOpts& o, const std::vector<std::string>& args, std::ostream& msg) {
  const Settings s = resolve_settings(o.common);
  Run run("eval", args, s);
  run.input(o.records);
  const auto records = load_instance_records(o.records);
  if (records.empty()) throw ValidationError("no records in '" + o.records + "'");

  std::vector<EvaluationReport> reports;
  for (Mode m : kAllModes) reports.push_back(score_static(records, m));

  if (!o.decisions.empty()) {
    std::vector<EvaluationReport> per_seed;
    std::map<std::string, std::vector<Mode>> modes_by_dataset;
    std::optional<bool> dataset_level;
    for (const auto& path : o.decisions) {
      run.input(path);
      const auto decisions = load_decisions(path);
      if (decisions.empty()) throw ValidationError("no decisions in '" + path + "'");
      const bool level = decisions.front().dataset_level();
      for (const auto& d : decisions) {
        if (d.dataset_level() != level) throw ValidationError("'" + path + "' mixes dataset- and instance-level decisions");
      }
      if (dataset_level && *dataset_level != level) throw ValidationError("decision files differ in routing level");
      dataset_level = level;
      if (level) {
        per_seed.push_back(score_dataset_routing(records, decisions));
        for (const auto& d : decisions) modes_by_dataset[d.dataset_id].push_back(d.mode);
      } else {
        per_seed.push_back(score_instance_routing(records, decisions, s.router, s.descriptor.probe_length));
      }
    }
    EvaluationReport policy = per_seed.size() == 1 ? per_seed.front() : average_reports(per_seed);
    if (*dataset_level && per_seed.size() > 1) {
      for (auto& e : policy.datasets) e.consistency = consistency_ratio(modes_by_dataset[e.dataset_id]);
    }
    reports.push_back(std::move(policy));
  }

  const fs::path json_path = o.out + ".json";
  const fs::path csv_path = o.out + ".csv";
  write_lines(json_path, [&](std::ostream& out) { write_report_json(out, reports); });
  write_lines(csv_path, [&](std::ostream& out) { write_report_csv(out, reports); });
  run.output(json_path);
  run.output(csv_path);
  run.finish(manifest_for(o.out));
  for (const auto& r : reports) {
    msg << r.policy << ": accuracy " << detail::format_double(r.overall.accuracy) << ", avg tokens "
        << detail::format_double(r.overall.avg_tokens) << '\n';
  }
  return kExitOk;
}

struct HeatmapOpts {
  Common common;
  std::string records;
  std::string traces;
  std::vector<double> lambdas;
  std::size_t x_bins = 12;
  std::size_t y_bins = 12;
  std::vector<double> x_edges;
  std::vector<double> y_edges;
  std::string out;
};

int cmd_heatmap(const HeatmapOpts& o, const std::vector<std::string>& args, std::ostream& msg) {
  const Settings s = resolve_settings(o.common);
  Run run("heatmap", args, s);
  run.input(o.records);
  auto records = load_instance_records(o.records);
  attach_traces(records, o.traces, run);
  GridSpec grid;
  grid.x_bins = o.x_bins;
  grid.y_bins = o.y_bins;
  grid.x_edges = o.x_edges;
  grid.y_edges = o.y_edges;
  grid.vnr_floor = s.vnr_floor;

  const std::vector<double> lambdas = o.lambdas.empty() ? std::vector<double>{s.gain.lambda} : o.lambdas;
  for (double lambda : lambdas) {
    UnifiedGainConfig ug = s.gain;
    ug.lambda = lambda;
    const HeatmapGrid g = build_heatmap(records, grid, ug, s.descriptor);
    const std::string stem = lambdas.size() == 1 ? o.out : o.out + "_lambda" + detail::format_double(lambda);
    const fs::path csv = stem + ".csv";
    const fs::path summary = stem + ".summary.json";
    write_lines(csv, [&](std::ostream& out) { write_heatmap_csv(out, g); });
    write_lines(summary, [&](std::ostream& out) { write_heatmap_summary(out, g, ug); });
    run.output(csv);
    run.output(summary);
    msg << "lambda " << detail::format_double(lambda) << ": " << g.binned_count() << " binned, "
        << g.overflow_count() << " overflow, " << g.skipped_count << " skipped -> " << csv.string() << '\n';
  }
  run.finish(manifest_for(o.out));
  return kExitOk;
}

struct TrainOpts {
  Common common;
  std::string records;
  std::string traces;
  std::string examples;
  std::string variant = "3d";
  std::string strategy = "multi_label";
  std::uint64_t seed = 0;
  double split_fraction = 0.1;
  std::string test_out;
  std::string out;
};

int cmd_train(const TrainOpts& o, const std::vector<std::string>& args, std::ostream& msg) {
  const Settings s = resolve_settings(o.common);
  Run run("train-router", args, s);
  run.seeds({o.seed});
  const FeatureVariant variant = parse_feature_variant(o.variant);
  const LabelStrategy strategy = parse_label_strategy(o.strategy);

  std::vector<LabeledExample> examples;
  std::map<std::pair<std::string, std::string>, InstanceRecord> by_id;
  if (!o.records.empty()) {
    run.input(o.records);
    auto records = load_instance_records(o.records);
    attach_traces(records, o.traces, run);
    examples = build_examples(records, variant, strategy, s.descriptor);
    for (const auto& r : records) by_id.emplace(std::pair{r.dataset_id, r.instance_id}, r);
  } else if (!o.examples.empty()) {
    run.input(o.examples);
    for (auto& e : load_examples(o.examples, variant)) {
      if (auto target = target_labels(e.labels, strategy)) {
        e.labels = *target;
        examples.push_back(std::move(e));
      }
    }
  } else {
    throw ValidationError("one of --records or --examples is required");
  }

  Split split;
  if (o.split_fraction > 0.0) {
    split = stratified_split(examples, o.split_fraction, o.seed);
  } else {
    split.train = examples;
  }
  TrainConfig tc = s.train;
  tc.seed = o.seed;
  const LearnedRouterModel model = train_router(split.train, variant, strategy, tc);
  save_model(o.out, model);
  run.output(o.out);
  if (!o.test_out.empty()) {
    write_lines(o.test_out, [&](std::ostream& out) { write_examples(out, split.test); });
    run.output(o.test_out);
  }
  run.finish(manifest_for(o.out));

  msg << "trained " << to_string(variant) << " " << to_string(strategy) << " router on " << split.train.size()
      << " example(s); held out " << split.test.size() << '\n';
  if (!split.test.empty()) {
    std::size_t hits = 0;
    for (const auto& e : split.test) {
      const Mode m = predict(model, e.feature);
      const auto it = by_id.find({e.dataset_id, e.instance_id});
      hits += it != by_id.end() ? it->second.outcome(m).correct : e.labels.y[index_of(m)];
    }
    msg << "held-out routing accuracy " << detail::format_double(static_cast<double>(hits) / split.test.size())
        << '\n';
  }
  return kExitOk;
}

struct PredictOpts {
  Common common;
  std::string model;
  std::string records;
  std::string traces;
  std::string examples;
  std::string out;
};

int cmd_predict(const PredictOpts& o, const std::vector<std::string>& args, std::ostream& msg) {
  const Settings s = resolve_settings(o.common);
  Run run("predict-router", args, s);
  run.input(o.model);
  const LearnedRouterModel model = load_model(o.model);

  std::vector<RoutingDecision> decisions;
  std::size_t hits = 0, scored = 0;
  auto learned = [&](const std::string& instance, const std::string& dataset, Mode m) {
    RoutingDecision d;
    d.instance_id = instance;
    d.dataset_id = dataset;
    d.mode = m;
    d.reason = RoutingReason::LearnedRouter;
    decisions.push_back(std::move(d));
  };
  auto from_trace = [&](const EntropyTrace& t) -> std::optional<Mode> {
    try {
      const Mode m = predict(model, build_feature(t, model.variant, s.descriptor));
      learned(t.instance_id(), t.dataset_id(), m);
      return m;
    } catch (const EarlyStopError&) {
      RoutingDecision d;
      d.instance_id = t.instance_id();
      d.dataset_id = t.dataset_id();
      d.mode = Mode::Standard;
      d.reason = RoutingReason::EarlyStop;
      decisions.push_back(std::move(d));
      return Mode::Standard;
    }
  };

  if (o.examples.empty() == (o.records.empty() && o.traces.empty())) {
    throw ValidationError("give --examples, or --records and/or --traces");
  }
  if (!o.examples.empty()) {
    run.input(o.examples);
    for (const auto& e : load_examples(o.examples, model.variant)) {
      const Mode m = predict(model, e.feature);
      learned(e.instance_id, e.dataset_id, m);
      hits += e.labels.y[index_of(m)];
      ++scored;
    }
  } else if (o.records.empty()) {
    run.input(o.traces);
    for (const auto& t : load_traces(o.traces)) (void)from_trace(t);
  } else {
    run.input(o.records);
    auto records = load_instance_records(o.records);
    attach_traces(records, o.traces, run);
    for (const auto& r : records) {
      if (!r.trace) throw ValidationError("record '" + r.instance_id + "' has no entropy trace");
      const Mode m = *from_trace(*r.trace);
      hits += r.outcome(m).correct;
      ++scored;
    }
  }
  save_decisions(o.out, decisions);
  run.output(o.out);
  run.finish(manifest_for(o.out));
  msg << "predicted " << decisions.size() << " decision(s)";
  if (scored > 0) msg << "; agreement " << detail::format_double(static_cast<double>(hits) / scored);
  msg << '\n';
  return kExitOk;
}

struct ProbeOpts {
  Common common;
  std::string questions;
  std::string templates;
  bool reasoning = false;
  std::optional<std::string> endpoint;
  std::optional<std::string> model;
  std::optional<std::string> api;
  std::optional<std::size_t> top_k;
  std::string out;
};

int cmd_probe(const ProbeOpts& o, const std::vector<std::string>& args, std::ostream& msg) {
  Settings s = resolve_settings(o.common);
  if (o.endpoint) s.probe.endpoint = *o.endpoint;
  if (o.model) s.probe.model = *o.model;
  if (o.api) s.probe.api = parse_api_kind(*o.api);
  if (o.top_k) s.probe.top_k = *o.top_k;
  s.validate();
  Run run("probe", args, s);
  run.input(o.questions);
  const auto questions = load_questions(o.questions);

  TemplateSet templates = o.reasoning ? TemplateSet::reasoning_defaults() : TemplateSet::defaults();
  if (!o.templates.empty()) {
    run.input(o.templates);
    templates = TemplateSet::load(o.templates);
  }
  const ProbeClient client(s.probe, templates);
  const auto outcomes = client.probe_many(questions);

  std::vector<EntropyTrace> traces;
  std::size_t failed = 0, transport = 0, early = 0;
  for (const auto& oc : outcomes) {
    if (oc.result) {
      early += oc.result->trace.terminated_early() ? 1 : 0;
      traces.push_back(oc.result->trace);
    } else {
      ++failed;
      transport += oc.error_kind == "transport" ? 1 : 0;
    }
  }
  save_traces(o.out, traces);
  run.output(o.out);
  if (failed > 0) {
    const fs::path fail_path = o.out + ".failures.jsonl";
    write_lines(fail_path, [&](std::ostream& out) {
      for (const auto& oc : outcomes) {
        if (oc.result) continue;
        ojson j{{"instance_id", oc.instance_id},
                {"dataset_id", oc.dataset_id},
                {"error_kind", oc.error_kind},
                {"error", oc.error}};
        out << j.dump() << '\n';
      }
    });
    run.output(fail_path);
  }
  run.finish(manifest_for(o.out));
  msg << "probed " << questions.size() << " question(s): " << traces.size() << " trace(s), " << early
      << " early stop, " << failed << " failed\n";
  if (failed == 0) return kExitOk;
  return (failed == questions.size() && transport > 0) ? kExitTransport : kExitPartial;
}

struct ShowConfigOpts {
  Common common;
};

int cmd_show_config(const ShowConfigOpts& o, std::ostream& msg) {
  write_settings(msg, resolve_settings(o.common));
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Entropy-dynamics routing between Direct, Standard and CoT decoding", "entroute"};
  app.set_version_flag("--version", tool_version());
  app.require_subcommand(1);

  ExtractOpts ex;
  auto* extract = app.add_subcommand("extract", "entropy traces -> descriptors");
  add_common(extract, ex.common);
  add_descriptor_input(extract, ex.input);
  extract->add_option("--out", ex.out, "descriptor JSONL")->required();

  RouteOpts ro;
  auto* route_cmd = app.add_subcommand("route", "descriptors or traces -> routing decisions");
  add_common(route_cmd, ro.common);
  add_descriptor_input(route_cmd, ro.input);
  route_cmd->add_option("--level", ro.level, "global | instance")->check(CLI::IsMember({"global", "instance"}));
  route_cmd->add_option("--sample-size", ro.sample_size, "instances sampled per dataset (0 = all)");
  route_cmd->add_option("--seed", ro.seed, "sampling seed");
  route_cmd->add_option("--seeds", ro.seeds, "several seeds; --out becomes a directory")->delimiter(',');
  route_cmd->add_flag("--default-seeds", ro.default_seeds, "use the seed set 0,1,2,3,11,12,13,14");
  route_cmd->add_option("--out", ro.out, "decisions JSONL (or directory with several seeds)")->required();

  CalibrateOpts co;
  auto* calibrate = app.add_subcommand("calibrate", "estimate s_h_threshold from sampled probes");
  add_common(calibrate, co.common);
  add_descriptor_input(calibrate, co.input);
  calibrate->add_option("--sample-size", co.sample_size, "instances sampled per dataset");
  calibrate->add_option("--seed", co.seed, "sampling seed");
  calibrate->add_option("--out", co.out, "settings file with the calibrated threshold")->required();

  EvalOpts eo;
  auto* eval = app.add_subcommand("eval", "score decisions against per-mode outcomes");
  add_common(eval, eo.common);
  eval->add_option("--records", eo.records, "instance records JSONL")->required()->check(CLI::ExistingFile);
  eval->add_option("--decisions", eo.decisions, "decision JSONL, one per seed (repeatable)")
      ->check(CLI::ExistingFile);
  eval->add_option("--out", eo.out, "output prefix for .json and .csv")->required();

  HeatmapOpts ho;
  auto* heatmap = app.add_subcommand("heatmap", "mean CoT-over-Direct gain on the (V_sp/a_vnr, S_H) plane");
  add_common(heatmap, ho.common);
  heatmap->add_option("--records", ho.records, "instance records with entropies")->required()->check(CLI::ExistingFile);
  heatmap->add_option("--traces", ho.traces, "probe traces joined to the records")->check(CLI::ExistingFile);
  heatmap->add_option("--lambda", ho.lambdas, "cost weight(s); several values write one file each")->delimiter(',');
  heatmap->add_option("--x-bins", ho.x_bins, "bins along V_sp/a_vnr");
  heatmap->add_option("--y-bins", ho.y_bins, "bins along S_H");
  heatmap->add_option("--x-edges", ho.x_edges, "explicit x edges, comma separated")->delimiter(',');
  heatmap->add_option("--y-edges", ho.y_edges, "explicit y edges, comma separated")->delimiter(',');
  heatmap->add_option("--out", ho.out, "output prefix")->required();

  TrainOpts to;
  auto* train = app.add_subcommand("train-router", "train the learned instance-level router");
  add_common(train, to.common);
  auto* tr = train->add_option("--records", to.records, "instance records with entropies")->check(CLI::ExistingFile);
  auto* te = train->add_option("--examples", to.examples, "explicit feature/label JSONL")->check(CLI::ExistingFile);
  tr->excludes(te);
  train->add_option("--traces", to.traces, "probe traces joined to the records")->check(CLI::ExistingFile);
  train->add_option("--variant", to.variant, "3d | 64d | 67d");
  train->add_option("--strategy", to.strategy, "multi_label | priority_single");
  train->add_option("--seed", to.seed, "initialisation and shuffling seed");
  train->add_option("--split-fraction", to.split_fraction, "stratified training fraction (0 = train on all)");
  train->add_option("--test-out", to.test_out, "write the held-out examples here");
  train->add_option("--out", to.out, "model file")->required();

  PredictOpts po;
  auto* predict_cmd = app.add_subcommand("predict-router", "route instances with a trained model");
  add_common(predict_cmd, po.common);
  predict_cmd->add_option("--model", po.model, "model file")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--records", po.records, "instance records with entropies")->check(CLI::ExistingFile);
  predict_cmd->add_option("--traces", po.traces, "entropy trace JSONL")->check(CLI::ExistingFile);
  predict_cmd->add_option("--examples", po.examples, "explicit feature/label JSONL")->check(CLI::ExistingFile);
  predict_cmd->add_option("--out", po.out, "decisions JSONL")->required();

  ProbeOpts pr;
  auto* probe_cmd = app.add_subcommand("probe", "N-step probing against a completion endpoint");
  add_common(probe_cmd, pr.common);
  probe_cmd->add_option("--questions", pr.questions, "question JSONL")->required()->check(CLI::ExistingFile);
  probe_cmd->add_option("--templates", pr.templates, "prompt template JSON")->check(CLI::ExistingFile);
  probe_cmd->add_flag("--reasoning", pr.reasoning, "thinking-control defaults for reasoning models");
  probe_cmd->add_option("--endpoint", pr.endpoint, "scheme://host:port");
  probe_cmd->add_option("--model", pr.model, "model name");
  probe_cmd->add_option("--api", pr.api, "completions | chat");
  probe_cmd->add_option("--top-k", pr.top_k, "top-k log-probability depth");
  probe_cmd->add_option("--out", pr.out, "trace JSONL")->required();

  ShowConfigOpts sc;
  auto* show = app.add_subcommand("show-config", "print the effective settings");
  add_common(show, sc.common);

  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.emplace_back("entroute");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  WarningSink previous = set_warning_sink([&err](std::string_view m) { err << "warning: " << m << '\n'; });
  struct Restore {
    WarningSink& prev;
    ~Restore() { set_warning_sink(std::move(prev)); }
  } restore{previous};

  try {
    if (*extract) return cmd_extract(ex, args, out);
    if (*route_cmd) return cmd_route(ro, args, out);
    if (*calibrate) return cmd_calibrate(co, args, out);
    if (*eval) return cmd_eval(eo, args, out);
    if (*heatmap) return cmd_heatmap(ho, args, out);
    if (*train) return cmd_train(to, args, out);
    if (*predict_cmd) return cmd_predict(po, args, out);
    if (*probe_cmd) return cmd_probe(pr, args, out);
    if (*show) return cmd_show_config(sc, out);
  } catch (const TransportError& e) {
    err << "error: " << e.what() << '\n';
    return kExitTransport;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  return kExitInvalid;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace entroute
