#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "entroute/errors.hpp"
#include "entroute/learned_router.hpp"
#include "fixtures.hpp"

using namespace entroute;

namespace {

std::string model_bytes(const LearnedRouterModel& m) {
  std::ostringstream s;
  write_model(s, m);
  return s.str();
}

double held_out_accuracy(const LearnedRouterModel& m, const std::vector<LabeledExample>& test) {
  std::size_t hit = 0;
  for (const auto& e : test) {
    if (e.labels.y[index_of(predict(m, e.feature))] == 1) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(test.size());
}

// Central differences on every parameter; returns the worst relative error.
double gradient_check(LabelStrategy strategy) {
  std::mt19937_64 eng(41);
  std::normal_distribution<double> g(0.0, 1.0);
  Mlp net(4, 6);
  Rng rng(3);
  net.initialize(rng);
  std::vector<std::vector<double>> x(5, std::vector<double>(4));
  std::vector<LabelVector> y(5);
  for (std::size_t i = 0; i < 5; ++i) {
    for (auto& v : x[i]) v = g(eng);
    if (strategy == LabelStrategy::MultiLabel) {
      for (auto& b : y[i].y) b = eng() % 2;
    } else {
      y[i].y[i % 3] = 1;
    }
  }
  const auto w = fit_loss_weights(y, strategy);
  std::vector<double> grad;
  (void)batch_loss(net, x, y, w, 1e-2, &grad);
  double worst = 0.0;
  for (std::size_t p = 0; p < net.parameters().size(); ++p) {
    const double keep = net.parameters()[p];
    const double h = 1e-6;
    net.parameters()[p] = keep + h;
    const double up = batch_loss(net, x, y, w, 1e-2, nullptr);
    net.parameters()[p] = keep - h;
    const double down = batch_loss(net, x, y, w, 1e-2, nullptr);
    net.parameters()[p] = keep;
    const double numeric = (up - down) / (2.0 * h);
    const double rel = std::abs(numeric - grad[p]) / std::max(1e-8, std::abs(numeric) + std::abs(grad[p]));
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace

TEST(Labels, PrioritySingle) {
  EXPECT_EQ(target_labels({{0, 1, 1}}, LabelStrategy::PrioritySingle)->y, (std::array<std::uint8_t, 3>{0, 1, 0}));
  EXPECT_EQ(target_labels({{1, 1, 1}}, LabelStrategy::PrioritySingle)->y, (std::array<std::uint8_t, 3>{1, 0, 0}));
  EXPECT_FALSE(target_labels({{0, 0, 0}}, LabelStrategy::PrioritySingle).has_value());
  EXPECT_EQ(target_labels({{0, 0, 0}}, LabelStrategy::MultiLabel)->y, (std::array<std::uint8_t, 3>{0, 0, 0}));
}

TEST(Features, Layouts) {
  std::vector<double> v(64);
  for (std::size_t i = 0; i < 64; ++i) v[i] = static_cast<double>(i % 5);
  EntropyTrace t("a", "d", 64, v);
  auto f3 = build_feature(t, FeatureVariant::D3, {});
  auto f64 = build_feature(t, FeatureVariant::D64, {});
  auto f67 = build_feature(t, FeatureVariant::D67, {});
  ASSERT_EQ(f3.values.size(), 3U);
  ASSERT_EQ(f64.values.size(), 64U);
  ASSERT_EQ(f67.values.size(), 67U);
  EXPECT_TRUE(std::equal(f3.values.begin(), f3.values.end(), f67.values.begin()));
  EXPECT_TRUE(std::equal(f64.values.begin(), f64.values.end(), f67.values.begin() + 3));

  EntropyTrace short_t("b", "d", 64, {1.0, 2.0});
  auto padded = build_feature(short_t, FeatureVariant::D64, {});
  EXPECT_EQ(padded.values[1], 2.0);
  EXPECT_EQ(padded.values[63], 0.0);
  EXPECT_THROW((void)build_feature(short_t, FeatureVariant::D3, {}), EarlyStopError);
}

TEST(Scaler, StandardisesColumns) {
  std::vector<std::vector<double>> rows{{1, 5}, {3, 5}, {5, 5}};
  StandardScaler s;
  EXPECT_THROW((void)s.transform(rows[0]), StateError);
  s.fit(rows);
  EXPECT_EQ(s.scale()[1], 1.0);
  double sum = 0.0, sq = 0.0;
  for (const auto& r : rows) {
    auto z = s.transform(r);
    sum += z[0];
    sq += z[0] * z[0];
    EXPECT_EQ(z[1], 0.0);
  }
  EXPECT_NEAR(sum / 3.0, 0.0, 1e-12);
  EXPECT_NEAR(sq / 3.0, 1.0, 1e-12);
  EXPECT_THROW((void)s.transform(std::vector<double>{1.0}), ValidationError);
}

TEST(Mlp, ParameterLayout) {
  Mlp m(3, 128);
  auto o = m.offsets();
  EXPECT_EQ(o.total, 3U * 128 + 128 + 128U * 128 + 128 + 128U * 3 + 3);
  EXPECT_EQ(m.parameters().size(), o.total);
}

TEST(Mlp, InitWithinFanInBound) {
  Mlp m(9, 16);
  Rng rng(1);
  m.initialize(rng);
  auto o = m.offsets();
  for (std::size_t i = o.w1; i < o.w2; ++i) EXPECT_LE(std::abs(m.parameters()[i]), 1.0 / 3.0);
}

TEST(Loss, GradientCheckMultiLabel) { EXPECT_LT(gradient_check(LabelStrategy::MultiLabel), 1e-4); }

TEST(Loss, GradientCheckPrioritySingle) { EXPECT_LT(gradient_check(LabelStrategy::PrioritySingle), 1e-4); }

TEST(Loss, PosWeightIsNegOverPos) {
  std::vector<LabelVector> y{{{1, 0, 1}}, {{0, 0, 1}}, {{0, 0, 1}}, {{0, 1, 1}}};
  auto w = fit_loss_weights(y, LabelStrategy::MultiLabel);
  EXPECT_DOUBLE_EQ(w.class_weights[0], 3.0);
  EXPECT_DOUBLE_EQ(w.class_weights[1], 3.0);
  EXPECT_DOUBLE_EQ(w.class_weights[2], 1.0);
}

TEST(ArgMax, TieBreaksByPriority) {
  EXPECT_EQ(argmax_mode({1.0, 1.0, 1.0}), Mode::Direct);
  EXPECT_EQ(argmax_mode({0.0, 2.0, 2.0}), Mode::Standard);
  EXPECT_EQ(argmax_mode({0.0, 1.0, 2.0}), Mode::CoT);
}

TEST(Train, SeparableBlobs) {
  auto train = fixture::blobs(100, 1);
  auto test = fixture::blobs(100, 2, 3, "t");
  TrainConfig cfg;
  cfg.epochs = 30;
  auto m = train_router(train, FeatureVariant::D3, LabelStrategy::PrioritySingle, cfg);
  EXPECT_GE(held_out_accuracy(m, test), 0.95);
  auto ml = train_router(train, FeatureVariant::D3, LabelStrategy::MultiLabel, cfg);
  EXPECT_GE(held_out_accuracy(ml, test), 0.95);
}

TEST(Train, DeterministicAndOrderInvariant) {
  auto train = fixture::blobs(20, 5);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.seed = 9;
  const auto a = model_bytes(train_router(train, FeatureVariant::D3, LabelStrategy::MultiLabel, cfg));
  const auto b = model_bytes(train_router(train, FeatureVariant::D3, LabelStrategy::MultiLabel, cfg));
  EXPECT_EQ(a, b);
  std::reverse(train.begin(), train.end());
  EXPECT_EQ(model_bytes(train_router(train, FeatureVariant::D3, LabelStrategy::MultiLabel, cfg)), a);
  cfg.seed = 10;
  EXPECT_NE(model_bytes(train_router(train, FeatureVariant::D3, LabelStrategy::MultiLabel, cfg)), a);
}

TEST(Train, EmptyRejected) {
  EXPECT_THROW((void)train_router({}, FeatureVariant::D3, LabelStrategy::MultiLabel, {}), ValidationError);
}

TEST(ModelIo, RoundTripPreservesScores) {
  auto train = fixture::blobs(10, 4);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.hidden_dim = 8;
  auto m = train_router(train, FeatureVariant::D3, LabelStrategy::MultiLabel, cfg);
  std::stringstream s;
  write_model(s, m);
  auto back = read_model(s, "mem");
  EXPECT_EQ(model_bytes(back), model_bytes(m));
  EXPECT_EQ(back.scores(train[0].feature), m.scores(train[0].feature));
  RouterFeature wrong{FeatureVariant::D64, std::vector<double>(64, 0.0)};
  EXPECT_THROW((void)predict(m, wrong), ValidationError);
}

TEST(Split, StratifiedAndSeeded) {
  auto ex = fixture::blobs(10, 6);
  auto s = stratified_split(ex, 0.3, 1);
  EXPECT_EQ(s.train.size(), 9U);
  EXPECT_EQ(s.test.size(), 21U);
  std::reverse(ex.begin(), ex.end());
  auto again = stratified_split(ex, 0.3, 1);
  ASSERT_EQ(again.train.size(), s.train.size());
  for (std::size_t i = 0; i < s.train.size(); ++i) EXPECT_EQ(again.train[i].instance_id, s.train[i].instance_id);
}

TEST(ExamplesIo, WrongWidthRejected) {
  std::istringstream in(R"({"instance_id":"a","dataset_id":"d","features":[1,2],"labels":[1,0,0]})" "\n");
  EXPECT_THROW((void)read_examples(in, "mem", FeatureVariant::D3), ValidationError);
}
