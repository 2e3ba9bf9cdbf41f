#pragma once

#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "entroute/cli.hpp"
#include "entroute/mock_server.hpp"
#include "tempdir.hpp"

namespace fixture {

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

inline CliRun cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliRun r;
  r.code = entroute::run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

/// probe -> extract -> route (global, 8 seeds) -> eval -> heatmap over the bundled
/// synthetic set, served by an in-process mock. Returns every produced file except
/// run manifests (which carry timestamps and paths), keyed by relative path, or an
/// empty map with `failure` set when a step exits non-zero.
inline std::map<std::string, std::string> run_synthetic_pipeline(const std::filesystem::path& dir,
                                                                 std::string& failure) {
  const auto data = source_dir() / "data" / "synthetic";
  entroute::MockServer server(entroute::MockScript::load(data / "mock_script.json"));
  server.start();
  const auto p = [&](const std::string& name) { return (dir / name).string(); };

  const std::vector<std::vector<std::string>> steps{
      {"probe", "--questions", (data / "questions.jsonl").string(), "--endpoint", server.url(), "--out",
       p("traces.jsonl")},
      {"extract", "--traces", p("traces.jsonl"), "--out", p("descriptors.jsonl")},
      {"route", "--descriptors", p("descriptors.jsonl"), "--level", "global", "--sample-size", "12",
       "--default-seeds", "--out", p("global")},
      {"route", "--traces", p("traces.jsonl"), "--level", "instance", "--out", p("instance.jsonl")},
      {"heatmap", "--records", (data / "records.jsonl").string(), "--traces", p("traces.jsonl"), "--out",
       p("heatmap")},
  };
  for (const auto& s : steps) {
    auto r = cli(s);
    if (r.code != 0) {
      failure = s[0] + " exited " + std::to_string(r.code) + ": " + r.err;
      return {};
    }
  }
  std::vector<std::string> eval{"eval", "--records", (data / "records.jsonl").string()};
  for (std::uint64_t seed : entroute::kDefaultSeeds) {
    eval.push_back("--decisions");
    eval.push_back(p("global/decisions_seed" + std::to_string(seed) + ".jsonl"));
  }
  eval.insert(eval.end(), {"--out", p("eval_global")});
  auto r = cli(eval);
  if (r.code != 0) {
    failure = "eval exited " + std::to_string(r.code) + ": " + r.err;
    return {};
  }
  auto ri = cli({"eval", "--records", (data / "records.jsonl").string(), "--decisions", p("instance.jsonl"), "--out",
                 p("eval_instance")});
  if (ri.code != 0) {
    failure = "eval (instance) exited " + std::to_string(ri.code) + ": " + ri.err;
    return {};
  }

  std::map<std::string, std::string> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(e.path(), dir).string();
    if (rel.find("manifest") != std::string::npos) continue;
    files[rel] = slurp(e.path());
  }
  return files;
}

}  // namespace fixture
