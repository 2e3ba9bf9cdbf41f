#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "entroute/descriptors.hpp"
#include "entroute/rng.hpp"
#include "entroute/types.hpp"

namespace entroute {

inline constexpr std::size_t kTrajectoryDim = 64;
inline constexpr std::string_view kModelFormat = "entroute-router-v1";

/// 3D: (S_H, V_sp, a_vnr). 64D: entropy trajectory truncated or zero-padded to 64.
/// 67D: the 3 descriptors followed by the 64 trajectory values.
enum class FeatureVariant : std::uint8_t { D3, D64, D67 };
enum class LabelStrategy : std::uint8_t { MultiLabel, PrioritySingle };

[[nodiscard]] std::size_t feature_dim(FeatureVariant v) noexcept;
[[nodiscard]] std::string_view to_string(FeatureVariant v) noexcept;
[[nodiscard]] FeatureVariant parse_feature_variant(std::string_view s);
[[nodiscard]] std::string_view to_string(LabelStrategy s) noexcept;
[[nodiscard]] LabelStrategy parse_label_strategy(std::string_view s);

/// Per-mode correctness indicators, ordered Direct, Standard, CoT.
struct LabelVector {
  std::array<std::uint8_t, 3> y{0, 0, 0};

  [[nodiscard]] unsigned pattern() const noexcept { return (y[0] << 2U) | (y[1] << 1U) | y[2]; }
  [[nodiscard]] bool any() const noexcept { return y[0] || y[1] || y[2]; }
  friend bool operator==(const LabelVector&, const LabelVector&) = default;
};

[[nodiscard]] LabelVector correctness_labels(const InstanceRecord& record);

/// Multi-label: unchanged. Priority-single: one-hot of the first correct mode in
/// Direct > Standard > CoT order, or nullopt for [0,0,0].
[[nodiscard]] std::optional<LabelVector> target_labels(const LabelVector& raw, LabelStrategy strategy);

struct RouterFeature {
  FeatureVariant variant = FeatureVariant::D3;
  std::vector<double> values;
};

/// Throws EarlyStopError for 3D/67D features of an early-stopped trace.
[[nodiscard]] RouterFeature build_feature(const EntropyTrace& trace, FeatureVariant variant,
                                          const DescriptorConfig& cfg);

struct LabeledExample {
  std::string instance_id;
  std::string dataset_id;
  RouterFeature feature;
  LabelVector labels;
};

/// Features plus target labels for every record with a usable trace. Records that
/// lack a trace, or whose descriptors are unavailable, are skipped with a warning.
[[nodiscard]] std::vector<LabeledExample> build_examples(std::span<const InstanceRecord> records,
                                                         FeatureVariant variant, LabelStrategy strategy,
                                                         const DescriptorConfig& cfg);

/// JSONL of {instance_id, dataset_id, features: [...], labels: [d, s, c]}. Every row
/// must have feature_dim(variant) values.
[[nodiscard]] std::vector<LabeledExample> read_examples(std::istream& in, const std::string& source,
                                                        FeatureVariant variant);
[[nodiscard]] std::vector<LabeledExample> load_examples(const std::filesystem::path& path, FeatureVariant variant);
void write_examples(std::ostream& out, std::span<const LabeledExample> examples);

struct Split {
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> test;
};

/// Groups by (dataset, label pattern); each non-empty group sends ceil(fraction * n),
/// at least one, to train. Input order does not matter.
[[nodiscard]] Split stratified_split(std::span<const LabeledExample> examples, double fraction, std::uint64_t seed);

class StandardScaler {
 public:
  StandardScaler() = default;
  StandardScaler(std::vector<double> mean, std::vector<double> scale);

  void fit(std::span<const std::vector<double>> rows);
  [[nodiscard]] std::vector<double> transform(std::span<const double> row) const;

  [[nodiscard]] bool fitted() const noexcept { return !mean_.empty(); }
  [[nodiscard]] std::size_t dim() const noexcept { return mean_.size(); }
  [[nodiscard]] const std::vector<double>& mean() const noexcept { return mean_; }
  /// Population standard deviation, or 1 for zero-variance dimensions.
  [[nodiscard]] const std::vector<double>& scale() const noexcept { return scale_; }

 private:
  std::vector<double> mean_;
  std::vector<double> scale_;
};

/// input -> hidden -> hidden -> 3 with ReLU between layers. All parameters live in one
/// flat vector: W1, b1, W2, b2, W3, b3, weights row-major (out x in).
class Mlp {
 public:
  static constexpr std::size_t kOutputs = 3;

  Mlp() = default;
  Mlp(std::size_t input_dim, std::size_t hidden_dim);

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  void initialize(Rng& rng);

  [[nodiscard]] std::array<double, 3> forward(std::span<const double> x) const;

  [[nodiscard]] std::size_t input_dim() const noexcept { return in_; }
  [[nodiscard]] std::size_t hidden_dim() const noexcept { return hidden_; }
  [[nodiscard]] std::vector<double>& parameters() noexcept { return params_; }
  [[nodiscard]] const std::vector<double>& parameters() const noexcept { return params_; }

  struct Offsets {
    std::size_t w1, b1, w2, b2, w3, b3, total;
  };
  [[nodiscard]] Offsets offsets() const noexcept;

 private:
  std::size_t in_ = 0;
  std::size_t hidden_ = 0;
  std::vector<double> params_;
};

/// Multi-label: per-class pos_weight (neg/pos, 1 when a class has no positives).
/// Priority-single: class weight n / (3 * n_c), 0 for absent classes.
struct LossWeights {
  LabelStrategy strategy = LabelStrategy::MultiLabel;
  std::array<double, 3> class_weights{1.0, 1.0, 1.0};
};

[[nodiscard]] LossWeights fit_loss_weights(std::span<const LabelVector> labels, LabelStrategy strategy);

/// Mean loss over a batch of standardized inputs plus 0.5 * weight_decay * ||theta||^2.
/// Multi-label: BCE on logits with pos_weight, averaged over batch x 3. Priority-single:
/// class-weighted cross-entropy normalised by the summed weights. When `gradient` is
/// non-null it receives d(loss)/d(theta) in the parameter layout.
[[nodiscard]] double batch_loss(const Mlp& net, std::span<const std::vector<double>> inputs,
                                std::span<const LabelVector> labels, const LossWeights& weights,
                                double weight_decay, std::vector<double>* gradient);

struct TrainConfig {
  std::size_t hidden_dim = 128;
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  double weight_decay = 1e-4;
  std::size_t epochs = 0;  // 0: 120 for 64D multi-label, otherwise 100
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
};

[[nodiscard]] std::size_t default_epochs(FeatureVariant variant, LabelStrategy strategy) noexcept;

struct LearnedRouterModel {
  FeatureVariant variant = FeatureVariant::D3;
  LabelStrategy strategy = LabelStrategy::MultiLabel;
  StandardScaler scaler;
  Mlp net;

  /// Raw output scores (logits) for a feature of the model's variant.
  [[nodiscard]] std::array<double, 3> scores(const RouterFeature& feature) const;
};

/// Trains on `train` (all of one variant). Deterministic under cfg.seed and
/// independent of the order of `train`. Throws ValidationError for an empty split
/// and TrainingError on a non-finite loss.
[[nodiscard]] LearnedRouterModel train_router(std::span<const LabeledExample> train, FeatureVariant variant,
                                              LabelStrategy strategy, const TrainConfig& cfg);

/// Argmax over the three scores; ties go Direct, then Standard, then CoT.
[[nodiscard]] Mode argmax_mode(const std::array<double, 3>& scores) noexcept;

/// Throws ValidationError when the feature variant differs from the model's.
[[nodiscard]] Mode predict(const LearnedRouterModel& model, const RouterFeature& feature);

void write_model(std::ostream& out, const LearnedRouterModel& model);
void save_model(const std::filesystem::path& path, const LearnedRouterModel& model);
[[nodiscard]] LearnedRouterModel read_model(std::istream& in, const std::string& source);
[[nodiscard]] LearnedRouterModel load_model(const std::filesystem::path& path);

}  // namespace entroute
