#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "entroute/errors.hpp"
#include "entroute/evaluation.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace entroute;

namespace {

InstanceRecord rec(const std::string& id, std::array<ModeOutcome, 3> o, const std::string& ds = "d") {
  InstanceRecord r;
  r.instance_id = id;
  r.dataset_id = ds;
  r.outcomes = o;
  return r;
}

RoutingDecision at_instance(const std::string& id, Mode m, const std::string& ds = "d") {
  RoutingDecision d;
  d.instance_id = id;
  d.dataset_id = ds;
  d.mode = m;
  return d;
}

RoutingDecision at_dataset(const std::string& ds, Mode m) {
  RoutingDecision d;
  d.dataset_id = ds;
  d.mode = m;
  return d;
}

std::vector<InstanceRecord> random_records(std::mt19937_64& eng, std::size_t n) {
  std::vector<InstanceRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::array<ModeOutcome, 3> o{};
    for (auto& m : o) m = ModeOutcome{eng() % 2 == 0, static_cast<std::int64_t>(eng() % 400)};
    out.push_back(rec("i" + std::to_string(i), o));
  }
  return out;
}

}  // namespace

TEST(InstanceCost, WorkedCases) {
  auto r = rec("a", {ModeOutcome{false, 5}, ModeOutcome{false, 88}, ModeOutcome{true, 200}});
  EXPECT_EQ(instance_cost(r, Mode::CoT, true, 64), (InstanceCost{200, 64, 5, 269}));
  EXPECT_EQ(instance_cost(r, Mode::Standard, true, 64), (InstanceCost{88, 0, 5, 93}));
  EXPECT_EQ(instance_cost(r, Mode::Direct, true, 64), (InstanceCost{5, 64, 0, 69}));
  EXPECT_EQ(instance_cost(r, Mode::Standard, false, 64).total_tokens, 88);
}

TEST(InstanceCorrect, FallbackIsAnOr) {
  auto r = rec("a", {ModeOutcome{true, 5}, ModeOutcome{false, 88}, ModeOutcome{false, 200}});
  EXPECT_TRUE(instance_correct(r, Mode::CoT, true));
  EXPECT_FALSE(instance_correct(r, Mode::CoT, false));
  EXPECT_TRUE(instance_correct(r, Mode::Direct, false));
}

TEST(Consistency, Counts) {
  std::vector<Mode> m{Mode::Direct, Mode::Standard, Mode::Standard, Mode::CoT,
                      Mode::CoT,    Mode::CoT,      Mode::CoT,      Mode::CoT};
  EXPECT_EQ(consistency_ratio(m), (Consistency{1, 2, 5}));
  std::vector<Mode> all(8, Mode::Direct);
  EXPECT_EQ(consistency_ratio(all), (Consistency{8, 0, 0}));
  EXPECT_EQ(consistency_ratio(std::span<const Mode>{}), (Consistency{0, 0, 0}));
}

TEST(ScoreDataset, SelectsModeOwnValues) {
  for (const auto& row : fixture::benchmark_rows()) {
    auto recs = fixture::records_for(row, 10000);
    for (Mode m : kAllModes) {
      auto e = score_dataset_routing(recs, at_dataset(row.dataset, m));
      EXPECT_NEAR(e.accuracy * 100.0, row.modes[index_of(m)].accuracy_pct, 1e-9);
      EXPECT_NEAR(e.avg_tokens, row.modes[index_of(m)].avg_tokens, 1e-9);
      EXPECT_EQ(e.policy, "global");
    }
  }
}

TEST(ScoreDataset, MissingAndUnknownDatasets) {
  std::vector<InstanceRecord> recs{rec("a", {}, "x"), rec("b", {}, "y")};
  std::vector<RoutingDecision> only_x{at_dataset("x", Mode::Direct)};
  EXPECT_THROW((void)score_dataset_routing(recs, only_x), ValidationError);
  std::vector<RoutingDecision> extra{at_dataset("x", Mode::Direct), at_dataset("y", Mode::CoT),
                                     at_dataset("z", Mode::CoT)};
  EXPECT_THROW((void)score_dataset_routing(recs, extra), ValidationError);
  EXPECT_THROW((void)score_dataset_routing(recs, at_dataset("z", Mode::CoT)), ValidationError);
}

TEST(ScoreDataset, OverallIsInstanceWeighted) {
  std::vector<InstanceRecord> recs{rec("a", {ModeOutcome{true, 10}, {}, {}}, "x"),
                                   rec("b", {ModeOutcome{false, 10}, {}, {}}, "y"),
                                   rec("c", {ModeOutcome{false, 40}, {}, {}}, "y")};
  auto r = score_static(recs, Mode::Direct);
  EXPECT_NEAR(r.overall.accuracy, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(r.overall.avg_tokens, 20.0, 1e-12);
  EXPECT_EQ(r.datasets.size(), 2U);
  EXPECT_EQ(r.datasets[0].dataset_id, "x");
}

TEST(ScoreInstance, RejectsUnknownAndMissing) {
  std::vector<InstanceRecord> recs{rec("a", {}), rec("b", {})};
  std::vector<RoutingDecision> unknown{at_instance("a", Mode::CoT), at_instance("b", Mode::CoT),
                                       at_instance("q", Mode::CoT)};
  EXPECT_THROW((void)score_instance_routing(recs, unknown, {}, 64), ValidationError);
  std::vector<RoutingDecision> missing{at_instance("a", Mode::CoT)};
  EXPECT_THROW((void)score_instance_routing(recs, missing, {}, 64), ValidationError);
}

TEST(ScoreInstance, AccountingMatchesPerInstanceSum) {
  std::vector<InstanceRecord> recs{rec("a", {ModeOutcome{false, 5}, ModeOutcome{false, 88}, ModeOutcome{true, 200}}),
                                   rec("b", {ModeOutcome{true, 5}, ModeOutcome{false, 88}, ModeOutcome{false, 200}})};
  std::vector<RoutingDecision> ds{at_instance("a", Mode::CoT), at_instance("b", Mode::Standard)};
  auto r = score_instance_routing(recs, ds, {}, 64);
  EXPECT_NEAR(r.overall.avg_tokens, (269.0 + 93.0) / 2.0, 1e-12);
  EXPECT_NEAR(r.overall.accuracy, 1.0, 1e-15);
  RouterConfig off;
  off.enable_fallback = false;
  auto r2 = score_instance_routing(recs, ds, off, 64);
  EXPECT_NEAR(r2.overall.avg_tokens, (264.0 + 88.0) / 2.0, 1e-12);
  EXPECT_NEAR(r2.overall.accuracy, 0.5, 1e-15);
}

TEST(ScoreProperties, FallbackNeverHurtsAccuracy) {
  std::mt19937_64 eng(17);
  RouterConfig off;
  off.enable_fallback = false;
  for (int trial = 0; trial < 200; ++trial) {
    auto recs = random_records(eng, 1 + eng() % 30);
    std::vector<RoutingDecision> ds;
    for (const auto& r : recs) ds.push_back(at_instance(r.instance_id, kAllModes[eng() % 3]));
    auto on_r = score_instance_routing(recs, ds, {}, 64);
    auto off_r = score_instance_routing(recs, ds, off, 64);
    EXPECT_GE(on_r.overall.accuracy, off_r.overall.accuracy);
    for (std::size_t i = 0; i < recs.size(); ++i) {
      auto c = instance_cost(recs[i], ds[i].mode, false, 64);
      EXPECT_GE(c.total_tokens, c.answer_tokens);
      EXPECT_EQ(c.total_tokens == c.answer_tokens, ds[i].mode == Mode::Standard);
    }
  }
}

TEST(ScoreProperties, PermutationInvariant) {
  std::mt19937_64 eng(19);
  for (int trial = 0; trial < 50; ++trial) {
    auto recs = random_records(eng, 2 + eng() % 30);
    std::vector<RoutingDecision> ds;
    for (const auto& r : recs) ds.push_back(at_instance(r.instance_id, kAllModes[eng() % 3]));
    auto ref = score_instance_routing(recs, ds, {}, 64);
    std::shuffle(recs.begin(), recs.end(), eng);
    std::shuffle(ds.begin(), ds.end(), eng);
    auto again = score_instance_routing(recs, ds, {}, 64);
    EXPECT_NEAR(again.overall.accuracy, ref.overall.accuracy, 1e-12);
    EXPECT_NEAR(again.overall.avg_tokens, ref.overall.avg_tokens, 1e-9);
  }
}

TEST(AverageReports, MeanAcrossSeeds) {
  const auto& gsm = fixture::benchmark_rows()[2];
  auto recs = fixture::records_for(gsm);
  std::vector<EvaluationReport> per_seed;
  for (int s = 0; s < 8; ++s) {
    std::vector<RoutingDecision> one{at_dataset(gsm.dataset, s < 5 ? Mode::Standard : Mode::CoT)};
    per_seed.push_back(score_dataset_routing(recs, one));
  }
  auto avg = average_reports(per_seed);
  EXPECT_NEAR(avg.overall.accuracy * 100.0, 75.06, 0.01);
  EXPECT_NEAR(avg.overall.avg_tokens, 228.8, 0.1);
}

TEST(UnifiedGain, WorkedExample) {
  auto r = rec("a", {ModeOutcome{false, 5}, ModeOutcome{false, 0}, ModeOutcome{true, 300}});
  EXPECT_NEAR(unified_gain(r, Mode::CoT, Mode::Direct, {}), 0.98525, 1e-12);
  EXPECT_EQ(unified_gain(r, Mode::CoT, Mode::CoT, {}), 0.0);
  UnifiedGainConfig zero;
  zero.lambda = 0.0;
  EXPECT_EQ(unified_gain(r, Mode::CoT, Mode::Direct, zero), 1.0);
  EXPECT_EQ(unified_gain(r, Mode::Direct, Mode::CoT, zero), -1.0);
}

TEST(Heatmap, TwoInstancesOneCell) {
  std::vector<double> up(64);
  for (std::size_t i = 0; i < 64; ++i) up[i] = static_cast<double>(i % 7) + static_cast<double>(i) / 10.0;
  std::vector<InstanceRecord> recs{
      fixture::record_with_trace("a", up, {ModeOutcome{false, 0}, {}, ModeOutcome{true, 0}}),
      fixture::record_with_trace("b", up, {ModeOutcome{true, 0}, {}, ModeOutcome{false, 0}})};
  UnifiedGainConfig ug;
  ug.lambda = 0.0;
  GridSpec g;
  g.x_bins = 1;
  g.y_bins = 1;
  auto h = build_heatmap(recs, g, ug, {});
  ASSERT_EQ(h.cells.size(), 1U);
  EXPECT_EQ(h.cells[0].count, 2U);
  EXPECT_EQ(h.cells[0].mean_delta_u, 0.0);
}

TEST(Heatmap, OverflowAndSkipped) {
  std::vector<InstanceRecord> recs{fixture::record_with_trace("flat", std::vector<double>(64, 1.0), {}),
                                   rec("no-trace", {})};
  recs.push_back(rec("short", {}));
  recs.back().trace = EntropyTrace("short", "d", 64, {1.0, 2.0});
  auto h = build_heatmap(recs, GridSpec{}, {}, {});
  EXPECT_EQ(h.low_vnr_count, 1U);
  EXPECT_EQ(h.skipped_count, 2U);
  EXPECT_EQ(h.binned_count(), 0U);
  for (const auto& c : h.cells) EXPECT_TRUE(std::isnan(c.mean_delta_u));
}

TEST(Heatmap, DegenerateGridRejected) {
  GridSpec g;
  g.x_bins = 0;
  EXPECT_THROW((void)build_heatmap({}, g, {}, {}), ValidationError);
  GridSpec e;
  e.x_edges = {1.0, 1.0};
  EXPECT_THROW((void)build_heatmap({}, e, {}, {}), ValidationError);
}

TEST(Heatmap, MatchesBruteForceOracle) {
  std::mt19937_64 eng(23);
  std::vector<InstanceRecord> recs;
  std::vector<oracle::Point> pts;
  for (int i = 0; i < 60; ++i) {
    auto x = oracle::random_sequence(eng, 64);
    std::array<ModeOutcome, 3> o{ModeOutcome{eng() % 2 == 0, static_cast<std::int64_t>(eng() % 10)}, ModeOutcome{},
                                 ModeOutcome{eng() % 2 == 0, static_cast<std::int64_t>(eng() % 500)}};
    auto r = fixture::record_with_trace("i" + std::to_string(i), x, o);
    const double vnr = oracle::von_neumann(x, 1e-8);
    const double gain = (o[2].correct ? 1.0 : 0.0) - 0.05 * static_cast<double>(o[2].tokens) / 1000.0 -
                        ((o[0].correct ? 1.0 : 0.0) - 0.05 * static_cast<double>(o[0].tokens) / 1000.0);
    pts.push_back({oracle::spearman(x) / vnr, oracle::sum(x), gain});
    recs.push_back(std::move(r));
  }
  GridSpec g;
  g.x_edges = {-2.0, -0.5, 0.0, 0.4, 3.0};
  g.y_edges = {0.0, 80.0, 100.0, 120.0, 400.0};
  auto h = build_heatmap(recs, g, {}, {});
  auto expect = oracle::rebin(pts, g.x_edges, g.y_edges);
  ASSERT_EQ(h.cells.size(), expect.size());
  std::size_t binned = 0;
  for (std::size_t k = 0; k < expect.size(); ++k) {
    EXPECT_EQ(h.cells[k].count, expect[k].count);
    if (expect[k].count > 0) {
      EXPECT_NEAR(h.cells[k].mean_delta_u, expect[k].mean, 1e-12);
    }
    binned += expect[k].count;
  }
  EXPECT_EQ(h.binned_count() + h.overflow_count() + h.skipped_count, recs.size());
  EXPECT_EQ(h.binned_count(), binned);
}

TEST(ReportWriters, CsvColumns) {
  std::vector<InstanceRecord> recs{rec("a", {ModeOutcome{true, 4}, {}, {}}, "x")};
  std::vector<EvaluationReport> reps{score_static(recs, Mode::Direct)};
  std::ostringstream csv;
  write_report_csv(csv, reps);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "dataset,mode_or_policy,accuracy,avg_tokens,d,s,c");
  std::ostringstream json;
  write_report_json(json, reps);
  EXPECT_NE(json.str().find("\"reports\""), std::string::npos);
}
