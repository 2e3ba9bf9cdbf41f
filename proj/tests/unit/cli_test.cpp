#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "entroute/cli.hpp"
#include "entroute/learned_router.hpp"
#include "entroute/trace_model.hpp"
#include "fixtures.hpp"
#include "pipeline.hpp"
#include "tempdir.hpp"

using fixture::cli;

namespace {

std::string config_line(const std::string& shown, const std::string& key) {
  std::istringstream in(shown);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(key + " = ", 0) == 0) return line.substr(key.size() + 3);
  }
  return "<missing>";
}

}  // namespace

TEST(Cli, UnknownSubcommandIsInvalid) {
  EXPECT_EQ(cli({"bogus"}).code, entroute::kExitInvalid);
  EXPECT_EQ(cli({}).code, entroute::kExitInvalid);
}

TEST(Cli, SettingPrecedence) {
  fixture::TempDir tmp("entroute-cli");
  fixture::spit(tmp / "c.cfg", "k = 0.2\ns_h_threshold = 20\nepsilon = 1e-6\n");
  auto file_only = cli({"show-config", "--config", tmp / "c.cfg"});
  ASSERT_EQ(file_only.code, 0) << file_only.err;
  EXPECT_EQ(config_line(file_only.out, "k"), "0.2");

  auto flag = cli({"show-config", "--config", tmp / "c.cfg", "--k", "0.3"});
  EXPECT_EQ(config_line(flag.out, "k"), "0.3");
  EXPECT_EQ(config_line(flag.out, "s_h_threshold"), "20");

  auto set = cli({"show-config", "--config", tmp / "c.cfg", "--k", "0.3", "--set", "k=0.4"});
  EXPECT_EQ(config_line(set.out, "k"), "0.4");

  auto off = cli({"show-config", "--no-fallback"});
  EXPECT_EQ(config_line(off.out, "enable_fallback"), "false");

  EXPECT_EQ(cli({"show-config", "--set", "nonsense=1"}).code, entroute::kExitInvalid);
}

TEST(Cli, MissingInputIsInvalid) {
  EXPECT_EQ(cli({"extract", "--traces", "/nonexistent/t.jsonl", "--out", "/tmp/x"}).code, entroute::kExitInvalid);
}

TEST(Cli, ExtractAndRouteInstanceLevel) {
  fixture::TempDir tmp("entroute-cli");
  std::string traces;
  for (int i = 0; i < 3; ++i) {
    std::string vals;
    for (int t = 0; t < 64; ++t) vals += (t ? "," : "") + std::to_string(i == 0 ? t * 0.1 : i == 1 ? 6.3 - t * 0.1 : 1.0);
    traces += R"({"instance_id":"i)" + std::to_string(i) + R"(","dataset_id":"d","probe_length":64,"entropies":[)" +
              vals + "]}\n";
  }
  traces += R"({"instance_id":"i3","dataset_id":"d","probe_length":64,"entropies":[1,2]})" "\n";
  fixture::spit(tmp / "t.jsonl", traces);

  ASSERT_EQ(cli({"extract", "--traces", tmp / "t.jsonl", "--out", tmp / "d.jsonl"}).code, 0);
  auto r = cli({"route", "--descriptors", tmp / "d.jsonl", "--level", "instance", "--out", tmp / "r.jsonl"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto ds = entroute::load_decisions(tmp / "r.jsonl");
  ASSERT_EQ(ds.size(), 4U);
  EXPECT_EQ(ds[0].mode, entroute::Mode::Direct);
  EXPECT_EQ(ds[1].mode, entroute::Mode::CoT);
  EXPECT_EQ(ds[2].mode, entroute::Mode::Standard);
  EXPECT_EQ(ds[3].reason, entroute::RoutingReason::EarlyStop);
  EXPECT_TRUE(std::filesystem::exists(tmp / "r.jsonl.manifest.json"));
}

TEST(Cli, ProbeAllFailingIsTransportExit) {
  fixture::TempDir tmp("entroute-cli");
  fixture::spit(tmp / "q.jsonl", R"({"instance_id":"a","dataset_id":"d","question":"Q"})" "\n");
  std::string url;
  {
    entroute::MockServer gone(entroute::MockScript{});
    gone.start();
    url = gone.url();
  }
  auto r = cli({"probe", "--questions", tmp / "q.jsonl", "--endpoint", url, "--set", "max_retries=0", "--out",
                tmp / "t.jsonl"});
  EXPECT_EQ(r.code, entroute::kExitTransport);
  EXPECT_TRUE(std::filesystem::exists(tmp / "t.jsonl.failures.jsonl"));
}

TEST(Cli, ProbePartialFailureExit) {
  fixture::TempDir tmp("entroute-cli");
  fixture::spit(tmp / "q.jsonl", R"({"instance_id":"a","dataset_id":"d","question":"Q"})" "\n");
  entroute::MockScript script;
  script.supports_logprobs = false;
  entroute::MockServer server(script);
  server.start();
  auto r = cli({"probe", "--questions", tmp / "q.jsonl", "--endpoint", server.url(), "--out", tmp / "t.jsonl"});
  EXPECT_EQ(r.code, entroute::kExitPartial);
}

TEST(Cli, SyntheticPipelineRoutesAsConstructed) {
  fixture::TempDir tmp("entroute-cli");
  std::string failure;
  auto files = fixture::run_synthetic_pipeline(tmp.path(), failure);
  ASSERT_FALSE(files.empty()) << failure;
  auto d0 = entroute::load_decisions(tmp.path() / "global" / "decisions_seed0.jsonl");
  ASSERT_EQ(d0.size(), 3U);
  EXPECT_EQ(d0[0].mode, entroute::Mode::Direct);
  EXPECT_EQ(d0[1].mode, entroute::Mode::CoT);
  EXPECT_EQ(d0[2].mode, entroute::Mode::Standard);
  EXPECT_NE(files["eval_global.csv"].find("synth-rising,global,"), std::string::npos);
  EXPECT_TRUE(files.count("heatmap.csv"));
  EXPECT_TRUE(files.count("heatmap.summary.json"));
}

TEST(Cli, TrainAndPredictRouter) {
  fixture::TempDir tmp("entroute-cli");
  auto ex = fixture::blobs(30, 3);
  {
    std::ofstream out(tmp / "ex.jsonl");
    entroute::write_examples(out, ex);
  }
  auto t = cli({"train-router", "--examples", tmp / "ex.jsonl", "--variant", "3d", "--strategy", "priority_single",
                "--set", "epochs=20", "--out", tmp / "m.json"});
  ASSERT_EQ(t.code, 0) << t.err;
  auto p = cli({"predict-router", "--model", tmp / "m.json", "--examples", tmp / "ex.jsonl", "--out", tmp / "p.jsonl"});
  ASSERT_EQ(p.code, 0) << p.err;
  auto ds = entroute::load_decisions(tmp / "p.jsonl");
  EXPECT_EQ(ds.size(), ex.size());
  EXPECT_EQ(ds[0].reason, entroute::RoutingReason::LearnedRouter);
}
