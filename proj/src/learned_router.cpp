#include "entroute/learned_router.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <utility>

#include "entroute/errors.hpp"
#include "entroute/log.hpp"
#include "jsonl.hpp"

namespace entroute {

std::size_t feature_dim(FeatureVariant v) noexcept {
  switch (v) {
    case FeatureVariant::D3: return 3;
    case FeatureVariant::D64: return kTrajectoryDim;
    case FeatureVariant::D67: return 3 + kTrajectoryDim;
  }
  return 0;
}

std::string_view to_string(FeatureVariant v) noexcept {
  switch (v) {
    case FeatureVariant::D3: return "3d";
    case FeatureVariant::D64: return "64d";
    case FeatureVariant::D67: return "67d";
  }
  return "?";
}

FeatureVariant parse_feature_variant(std::string_view s) {
  if (s == "3d" || s == "3D" || s == "3") return FeatureVariant::D3;
  if (s == "64d" || s == "64D" || s == "64") return FeatureVariant::D64;
  if (s == "67d" || s == "67D" || s == "67") return FeatureVariant::D67;
  throw ValidationError("unknown feature variant '" + std::string(s) + "' (expected 3d, 64d or 67d)");
}

std::string_view to_string(LabelStrategy s) noexcept {
  return s == LabelStrategy::MultiLabel ? "multi_label" : "priority_single";
}

LabelStrategy parse_label_strategy(std::string_view s) {
  if (s == "multi_label" || s == "multi") return LabelStrategy::MultiLabel;
  if (s == "priority_single" || s == "single") return LabelStrategy::PrioritySingle;
  throw ValidationError("unknown label strategy '" + std::string(s) + "' (expected multi_label or priority_single)");
}

LabelVector correctness_labels(const InstanceRecord& record) {
  LabelVector v;
  for (Mode m : kAllModes) v.y[index_of(m)] = record.outcome(m).correct ? 1 : 0;
  return v;
}

std::optional<LabelVector> target_labels(const LabelVector& raw, LabelStrategy strategy) {
  if (strategy == LabelStrategy::MultiLabel) return raw;
  for (std::size_t c = 0; c < 3; ++c) {
    if (raw.y[c]) {
      LabelVector one_hot;
      one_hot.y[c] = 1;
      return one_hot;
    }
  }
  return std::nullopt;
}

RouterFeature build_feature(const EntropyTrace& trace, FeatureVariant variant, const DescriptorConfig& cfg) {
  RouterFeature f;
  f.variant = variant;
  f.values.reserve(feature_dim(variant));
  if (variant != FeatureVariant::D64) {
    const auto result = extract_descriptors(trace, cfg);
    const auto* d = std::get_if<Descriptors>(&result);
    if (d == nullptr) {
      throw EarlyStopError("trace '" + trace.instance_id() + "' stopped early; descriptors unavailable");
    }
    f.values.insert(f.values.end(), {d->s_h, d->v_sp, d->a_vnr});
  }
  if (variant != FeatureVariant::D3) {
    const auto& v = trace.values();
    const std::size_t keep = std::min(v.size(), kTrajectoryDim);
    f.values.insert(f.values.end(), v.begin(), v.begin() + static_cast<std::ptrdiff_t>(keep));
    f.values.resize(feature_dim(variant), 0.0);
  }
  return f;
}

std::vector<LabeledExample> build_examples(std::span<const InstanceRecord> records, FeatureVariant variant,
                                           LabelStrategy strategy, const DescriptorConfig& cfg) {
  std::vector<LabeledExample> out;
  std::size_t no_trace = 0, early = 0;
  for (const auto& r : records) {
    const auto labels = target_labels(correctness_labels(r), strategy);
    if (!labels) continue;
    if (!r.trace) {
      ++no_trace;
      continue;
    }
    try {
      out.push_back({r.instance_id, r.dataset_id, build_feature(*r.trace, variant, cfg), *labels});
    } catch (const EarlyStopError&) {
      ++early;
    }
  }
  if (no_trace > 0) warn("skipped " + std::to_string(no_trace) + " record(s) without an entropy trace");
  if (early > 0) warn("skipped " + std::to_string(early) + " early-stopped record(s); descriptors unavailable");
  return out;
}

std::vector<LabeledExample> read_examples(std::istream& in, const std::string& source, FeatureVariant variant) {
  std::vector<LabeledExample> out;
  detail::for_each_json_line(in, source, [&](const detail::json& j, std::size_t) {
    LabeledExample e;
    e.instance_id = detail::require_string(j, "instance_id");
    e.dataset_id = detail::require_string(j, "dataset_id");
    e.feature.variant = variant;
    e.feature.values = detail::require_numbers(j, "features");
    if (e.feature.values.size() != feature_dim(variant)) {
      throw ValidationError("expected " + std::to_string(feature_dim(variant)) + " features for variant " +
                            std::string(to_string(variant)) + ", got " + std::to_string(e.feature.values.size()));
    }
    const auto labels = detail::require_numbers(j, "labels");
    if (labels.size() != 3) throw ValidationError("labels must have 3 entries");
    for (std::size_t c = 0; c < 3; ++c) {
      if (labels[c] != 0.0 && labels[c] != 1.0) throw ValidationError("labels must be 0 or 1");
      e.labels.y[c] = labels[c] == 1.0 ? 1 : 0;
    }
    out.push_back(std::move(e));
  });
  return out;
}

std::vector<LabeledExample> load_examples(const std::filesystem::path& path, FeatureVariant variant) {
  auto in = detail::open_input(path);
  return read_examples(in, path.string(), variant);
}

void write_examples(std::ostream& out, std::span<const LabeledExample> examples) {
  for (const auto& e : examples) {
    nlohmann::ordered_json j;
    j["instance_id"] = e.instance_id;
    j["dataset_id"] = e.dataset_id;
    j["features"] = e.feature.values;
    j["labels"] = {e.labels.y[0], e.labels.y[1], e.labels.y[2]};
    out << j.dump() << '\n';
  }
}

namespace {

bool by_id(const LabeledExample& a, const LabeledExample& b) {
  return std::tie(a.dataset_id, a.instance_id) < std::tie(b.dataset_id, b.instance_id);
}

}  // namespace

Split stratified_split(std::span<const LabeledExample> examples, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ValidationError("split fraction must lie in (0, 1)");

  std::vector<LabeledExample> sorted(examples.begin(), examples.end());
  std::stable_sort(sorted.begin(), sorted.end(), by_id);

  std::map<std::pair<std::string, unsigned>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    groups[{sorted[i].dataset_id, sorted[i].labels.pattern()}].push_back(i);
  }

  Rng rng(seed);
  std::vector<bool> to_train(sorted.size(), false);
  for (auto& [key, members] : groups) {
    rng.shuffle(std::span<std::size_t>(members));
    // The small slack keeps products such as 0.1 * 70 from rounding up past 7.
    const double want = std::ceil(fraction * static_cast<double>(members.size()) - 1e-9);
    const std::size_t take = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(want, 1.0)), 1, members.size());
    for (std::size_t i = 0; i < take; ++i) to_train[members[i]] = true;
  }

  Split split;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    (to_train[i] ? split.train : split.test).push_back(std::move(sorted[i]));
  }
  return split;
}

StandardScaler::StandardScaler(std::vector<double> mean, std::vector<double> scale)
    : mean_(std::move(mean)), scale_(std::move(scale)) {
  if (mean_.size() != scale_.size()) throw ValidationError("scaler mean and scale differ in length");
  for (double s : scale_) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ValidationError("scaler scale must be finite and > 0");
  }
}

void StandardScaler::fit(std::span<const std::vector<double>> rows) {
  if (rows.empty()) throw ValidationError("cannot fit a scaler on zero rows");
  const std::size_t dim = rows.front().size();
  for (const auto& r : rows) {
    if (r.size() != dim) throw ValidationError("scaler rows differ in length");
  }
  std::vector<double> mean(dim), scale(dim);
  const auto n = static_cast<long double>(rows.size());
  for (std::size_t j = 0; j < dim; ++j) {
    bool constant = true;
    long double sum = 0.0L;
    for (const auto& r : rows) {
      sum += r[j];
      constant = constant && r[j] == rows.front()[j];
    }
    if (constant) {
      mean[j] = rows.front()[j];
      scale[j] = 1.0;
      continue;
    }
    const long double mu = sum / n;
    long double ss = 0.0L;
    for (const auto& r : rows) ss += (r[j] - mu) * (r[j] - mu);
    const double sd = static_cast<double>(std::sqrt(ss / n));
    mean[j] = static_cast<double>(mu);
    scale[j] = sd > 0.0 ? sd : 1.0;
  }
  mean_ = std::move(mean);
  scale_ = std::move(scale);
}

std::vector<double> StandardScaler::transform(std::span<const double> row) const {
  if (!fitted()) throw StateError("scaler used before fit");
  if (row.size() != mean_.size()) {
    throw ValidationError("scaler expects " + std::to_string(mean_.size()) + " values, got " +
                          std::to_string(row.size()));
  }
  std::vector<double> out(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) out[j] = (row[j] - mean_[j]) / scale_[j];
  return out;
}

Mlp::Mlp(std::size_t input_dim, std::size_t hidden_dim) : in_(input_dim), hidden_(hidden_dim) {
  if (in_ == 0 || hidden_ == 0) throw ValidationError("network dimensions must be >= 1");
  params_.assign(offsets().total, 0.0);
}

Mlp::Offsets Mlp::offsets() const noexcept {
  Offsets o{};
  o.w1 = 0;
  o.b1 = o.w1 + hidden_ * in_;
  o.w2 = o.b1 + hidden_;
  o.b2 = o.w2 + hidden_ * hidden_;
  o.w3 = o.b2 + hidden_;
  o.b3 = o.w3 + kOutputs * hidden_;
  o.total = o.b3 + kOutputs;
  return o;
}

void Mlp::initialize(Rng& rng) {
  const Offsets o = offsets();
  auto fill = [&](std::size_t from, std::size_t to, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = from; i < to; ++i) params_[i] = rng.uniform(-bound, bound);
  };
  fill(o.w1, o.w2, in_);
  fill(o.w2, o.w3, hidden_);
  fill(o.w3, o.total, hidden_);
}

namespace {

struct Activations {
  std::vector<double> h1, a1, h2, a2;
  std::array<double, 3> z{};
};

void forward_pass(const Mlp& net, std::span<const double> x, Activations& act) {
  const auto o = net.offsets();
  const std::size_t in = net.input_dim(), hd = net.hidden_dim();
  const double* p = net.parameters().data();
  act.h1.assign(hd, 0.0);
  act.a1.assign(hd, 0.0);
  act.h2.assign(hd, 0.0);
  act.a2.assign(hd, 0.0);
  for (std::size_t j = 0; j < hd; ++j) {
    double s = p[o.b1 + j];
    const double* w = p + o.w1 + j * in;
    for (std::size_t k = 0; k < in; ++k) s += w[k] * x[k];
    act.h1[j] = s;
    act.a1[j] = s > 0.0 ? s : 0.0;
  }
  for (std::size_t j = 0; j < hd; ++j) {
    double s = p[o.b2 + j];
    const double* w = p + o.w2 + j * hd;
    for (std::size_t k = 0; k < hd; ++k) s += w[k] * act.a1[k];
    act.h2[j] = s;
    act.a2[j] = s > 0.0 ? s : 0.0;
  }
  for (std::size_t c = 0; c < Mlp::kOutputs; ++c) {
    double s = p[o.b3 + c];
    const double* w = p + o.w3 + c * hd;
    for (std::size_t k = 0; k < hd; ++k) s += w[k] * act.a2[k];
    act.z[c] = s;
  }
}

void backward_pass(const Mlp& net, std::span<const double> x, const Activations& act,
                   const std::array<double, 3>& dz, std::vector<double>& g) {
  const auto o = net.offsets();
  const std::size_t in = net.input_dim(), hd = net.hidden_dim();
  const double* p = net.parameters().data();

  std::vector<double> da2(hd, 0.0);
  for (std::size_t c = 0; c < Mlp::kOutputs; ++c) {
    g[o.b3 + c] += dz[c];
    double* gw = g.data() + o.w3 + c * hd;
    const double* w = p + o.w3 + c * hd;
    for (std::size_t k = 0; k < hd; ++k) {
      gw[k] += dz[c] * act.a2[k];
      da2[k] += w[k] * dz[c];
    }
  }
  std::vector<double> da1(hd, 0.0);
  for (std::size_t j = 0; j < hd; ++j) {
    const double dh = act.h2[j] > 0.0 ? da2[j] : 0.0;
    if (dh == 0.0) continue;
    g[o.b2 + j] += dh;
    double* gw = g.data() + o.w2 + j * hd;
    const double* w = p + o.w2 + j * hd;
    for (std::size_t k = 0; k < hd; ++k) {
      gw[k] += dh * act.a1[k];
      da1[k] += w[k] * dh;
    }
  }
  for (std::size_t j = 0; j < hd; ++j) {
    const double dh = act.h1[j] > 0.0 ? da1[j] : 0.0;
    if (dh == 0.0) continue;
    g[o.b1 + j] += dh;
    double* gw = g.data() + o.w1 + j * in;
    for (std::size_t k = 0; k < in; ++k) gw[k] += dh * x[k];
  }
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::size_t single_class(const LabelVector& v) {
  for (std::size_t c = 0; c < 3; ++c) {
    if (v.y[c]) return c;
  }
  throw ValidationError("single-label target has no positive class");
}

}  // namespace

std::array<double, 3> Mlp::forward(std::span<const double> x) const {
  if (x.size() != in_) {
    throw ValidationError("network expects " + std::to_string(in_) + " inputs, got " + std::to_string(x.size()));
  }
  Activations act;
  forward_pass(*this, x, act);
  return act.z;
}

LossWeights fit_loss_weights(std::span<const LabelVector> labels, LabelStrategy strategy) {
  LossWeights w;
  w.strategy = strategy;
  const auto n = static_cast<double>(labels.size());
  std::array<std::size_t, 3> pos{0, 0, 0};
  for (const auto& l : labels) {
    if (strategy == LabelStrategy::MultiLabel) {
      for (std::size_t c = 0; c < 3; ++c) pos[c] += l.y[c];
    } else {
      ++pos[single_class(l)];
    }
  }
  for (std::size_t c = 0; c < 3; ++c) {
    const auto p = static_cast<double>(pos[c]);
    if (strategy == LabelStrategy::MultiLabel) {
      w.class_weights[c] = (pos[c] > 0 && pos[c] < labels.size()) ? (n - p) / p : 1.0;
    } else {
      w.class_weights[c] = pos[c] > 0 ? n / (3.0 * p) : 0.0;
    }
  }
  return w;
}

double batch_loss(const Mlp& net, std::span<const std::vector<double>> inputs, std::span<const LabelVector> labels,
                  const LossWeights& weights, double weight_decay, std::vector<double>* gradient) {
  if (inputs.size() != labels.size()) throw ValidationError("inputs and labels differ in count");
  if (inputs.empty()) throw ValidationError("empty batch");
  const std::size_t n = inputs.size();
  const auto& params = net.parameters();
  if (gradient != nullptr) gradient->assign(params.size(), 0.0);

  double norm = 0.0;
  if (weights.strategy == LabelStrategy::MultiLabel) {
    norm = static_cast<double>(n * Mlp::kOutputs);
  } else {
    for (const auto& l : labels) norm += weights.class_weights[single_class(l)];
    if (!(norm > 0.0)) throw ValidationError("batch has zero total class weight");
  }

  double loss = 0.0;
  Activations act;
  for (std::size_t i = 0; i < n; ++i) {
    if (inputs[i].size() != net.input_dim()) throw ValidationError("input width does not match the network");
    forward_pass(net, inputs[i], act);
    std::array<double, 3> dz{};
    if (weights.strategy == LabelStrategy::MultiLabel) {
      for (std::size_t c = 0; c < 3; ++c) {
        const double y = labels[i].y[c];
        const double pw = weights.class_weights[c];
        loss += pw * y * softplus(-act.z[c]) + (1.0 - y) * softplus(act.z[c]);
        const double s = sigmoid(act.z[c]);
        dz[c] = (pw * y * (s - 1.0) + (1.0 - y) * s) / norm;
      }
    } else {
      const std::size_t target = single_class(labels[i]);
      const double w = weights.class_weights[target];
      const double zmax = *std::max_element(act.z.begin(), act.z.end());
      double denom = 0.0;
      for (double z : act.z) denom += std::exp(z - zmax);
      const double lse = zmax + std::log(denom);
      loss += w * (lse - act.z[target]);
      for (std::size_t c = 0; c < 3; ++c) {
        const double prob = std::exp(act.z[c] - lse);
        dz[c] = w * (prob - (c == target ? 1.0 : 0.0)) / norm;
      }
    }
    if (gradient != nullptr) backward_pass(net, inputs[i], act, dz, *gradient);
  }
  loss /= norm;

  if (weight_decay > 0.0) {
    double sq = 0.0;
    for (double p : params) sq += p * p;
    loss += 0.5 * weight_decay * sq;
    if (gradient != nullptr) {
      for (std::size_t k = 0; k < params.size(); ++k) (*gradient)[k] += weight_decay * params[k];
    }
  }
  return loss;
}

void TrainConfig::validate() const {
  if (hidden_dim < 1) throw ValidationError("hidden_dim must be >= 1");
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be > 0");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (!(weight_decay >= 0.0)) throw ValidationError("weight_decay must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ValidationError("Adam betas must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw ValidationError("adam_epsilon must be > 0");
}

std::size_t default_epochs(FeatureVariant variant, LabelStrategy strategy) noexcept {
  return (variant == FeatureVariant::D64 && strategy == LabelStrategy::MultiLabel) ? 120 : 100;
}

std::array<double, 3> LearnedRouterModel::scores(const RouterFeature& feature) const {
  if (feature.variant != variant) {
    throw ValidationError("feature variant " + std::string(to_string(feature.variant)) + " does not match model variant " +
                          std::string(to_string(variant)));
  }
  return net.forward(scaler.transform(feature.values));
}

LearnedRouterModel train_router(std::span<const LabeledExample> train, FeatureVariant variant, LabelStrategy strategy,
                                const TrainConfig& cfg) {
  cfg.validate();
  if (train.empty()) throw ValidationError("training split is empty");

  std::vector<const LabeledExample*> ordered;
  ordered.reserve(train.size());
  for (const auto& e : train) {
    if (e.feature.variant != variant || e.feature.values.size() != feature_dim(variant)) {
      throw ValidationError("training example '" + e.instance_id + "' is not a " + std::string(to_string(variant)) +
                            " feature");
    }
    ordered.push_back(&e);
  }
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const LabeledExample* a, const LabeledExample* b) { return by_id(*a, *b); });

  LearnedRouterModel model;
  model.variant = variant;
  model.strategy = strategy;

  std::vector<std::vector<double>> raw;
  std::vector<LabelVector> labels;
  raw.reserve(ordered.size());
  labels.reserve(ordered.size());
  for (const auto* e : ordered) {
    raw.push_back(e->feature.values);
    labels.push_back(e->labels);
  }
  model.scaler.fit(raw);
  std::vector<std::vector<double>> x;
  x.reserve(raw.size());
  for (const auto& r : raw) x.push_back(model.scaler.transform(r));

  const LossWeights weights = fit_loss_weights(labels, strategy);

  Rng rng(cfg.seed);
  model.net = Mlp(feature_dim(variant), cfg.hidden_dim);
  model.net.initialize(rng);

  auto& theta = model.net.parameters();
  std::vector<double> m(theta.size(), 0.0), v(theta.size(), 0.0), grad;
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::vector<double>> bx;
  std::vector<LabelVector> by;

  const std::size_t epochs = cfg.epochs > 0 ? cfg.epochs : default_epochs(variant, strategy);
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      bx.clear();
      by.clear();
      for (std::size_t i = start; i < end; ++i) {
        bx.push_back(x[order[i]]);
        by.push_back(labels[order[i]]);
      }
      const double loss = batch_loss(model.net, bx, by, weights, cfg.weight_decay, &grad);
      if (!std::isfinite(loss)) throw TrainingError(epoch, "loss is not finite");

      ++step;
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      for (std::size_t k = 0; k < theta.size(); ++k) {
        m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * grad[k];
        v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * grad[k] * grad[k];
        theta[k] -= cfg.learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + cfg.adam_epsilon);
      }
    }
  }
  return model;
}

Mode argmax_mode(const std::array<double, 3>& scores) noexcept {
  std::size_t best = 0;
  for (std::size_t c = 1; c < 3; ++c) {
    if (scores[c] > scores[best]) best = c;
  }
  return kAllModes[best];
}

Mode predict(const LearnedRouterModel& model, const RouterFeature& feature) {
  return argmax_mode(model.scores(feature));
}

namespace {

using ojson = nlohmann::ordered_json;

std::vector<double> slice(const std::vector<double>& v, std::size_t from, std::size_t to) {
  return {v.begin() + static_cast<std::ptrdiff_t>(from), v.begin() + static_cast<std::ptrdiff_t>(to)};
}

}  // namespace

void write_model(std::ostream& out, const LearnedRouterModel& model) {
  const auto& p = model.net.parameters();
  const auto o = model.net.offsets();
  ojson j;
  j["format"] = kModelFormat;
  j["variant"] = to_string(model.variant);
  j["strategy"] = to_string(model.strategy);
  j["input_dim"] = model.net.input_dim();
  j["hidden_dim"] = model.net.hidden_dim();
  j["scaler"] = {{"mean", model.scaler.mean()}, {"scale", model.scaler.scale()}};
  j["layers"] = ojson::array({
      {{"weights", slice(p, o.w1, o.b1)}, {"bias", slice(p, o.b1, o.w2)}},
      {{"weights", slice(p, o.w2, o.b2)}, {"bias", slice(p, o.b2, o.w3)}},
      {{"weights", slice(p, o.w3, o.b3)}, {"bias", slice(p, o.b3, o.total)}},
  });
  out << j.dump() << '\n';
}

void save_model(const std::filesystem::path& path, const LearnedRouterModel& model) {
  auto out = detail::open_output(path);
  write_model(out, model);
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

LearnedRouterModel read_model(std::istream& in, const std::string& source) {
  ojson j;
  try {
    j = ojson::parse(in);
  } catch (const ojson::exception& e) {
    throw ParseError(source, 0, std::string("invalid model JSON: ") + e.what());
  }
  try {
    if (j.value("format", std::string()) != kModelFormat) {
      throw ParseError(source, 0, "not a router model (expected format '" + std::string(kModelFormat) + "')");
    }
    LearnedRouterModel model;
    model.variant = parse_feature_variant(j.at("variant").get<std::string>());
    model.strategy = parse_label_strategy(j.at("strategy").get<std::string>());
    const auto in_dim = j.at("input_dim").get<std::size_t>();
    const auto hidden = j.at("hidden_dim").get<std::size_t>();
    if (in_dim != feature_dim(model.variant)) throw ValidationError("input_dim does not match the variant");
    model.scaler = StandardScaler(j.at("scaler").at("mean").get<std::vector<double>>(),
                                  j.at("scaler").at("scale").get<std::vector<double>>());
    if (model.scaler.dim() != in_dim) throw ValidationError("scaler width does not match input_dim");

    model.net = Mlp(in_dim, hidden);
    const auto o = model.net.offsets();
    const std::array<std::pair<std::size_t, std::size_t>, 6> blocks{
        {{o.w1, o.b1}, {o.b1, o.w2}, {o.w2, o.b2}, {o.b2, o.w3}, {o.w3, o.b3}, {o.b3, o.total}}};
    const auto& layers = j.at("layers");
    if (!layers.is_array() || layers.size() != 3) throw ValidationError("model needs exactly 3 layers");
    auto& p = model.net.parameters();
    for (std::size_t l = 0; l < 3; ++l) {
      for (std::size_t part = 0; part < 2; ++part) {
        const auto values = layers[l].at(part == 0 ? "weights" : "bias").get<std::vector<double>>();
        const auto [from, to] = blocks[2 * l + part];
        if (values.size() != to - from) {
          throw ValidationError("layer " + std::to_string(l + 1) + " has the wrong number of parameters");
        }
        std::copy(values.begin(), values.end(), p.begin() + static_cast<std::ptrdiff_t>(from));
      }
    }
    return model;
  } catch (const ojson::exception& e) {
    throw ParseError(source, 0, e.what());
  } catch (const ValidationError& e) {
    throw ParseError(source, 0, e.what());
  }
}

LearnedRouterModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  return read_model(in, path.string());
}

}  // namespace entroute
