#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace entroute {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitPartial = 2;
inline constexpr int kExitTransport = 3;

/// The seed set used for multi-trial runs unless --seeds is given.
inline const std::vector<std::uint64_t> kDefaultSeeds{0, 1, 2, 3, 11, 12, 13, 14};

[[nodiscard]] std::string tool_version();

/// Lower-case hex SHA-256 of a file's bytes.
[[nodiscard]] std::string sha256_file(const std::filesystem::path& path);

struct RunManifest {
  std::string command;
  std::vector<std::string> arguments;
  nlohmann::ordered_json config;
  std::vector<std::pair<std::string, std::string>> inputs;  // path, sha256
  std::vector<std::string> outputs;
  std::vector<std::uint64_t> seeds;
  std::string version;
  std::string timestamp;  // UTC, ISO 8601

  [[nodiscard]] nlohmann::ordered_json to_json() const;
};

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

/// Runs one subcommand. `args` excludes the program name. Messages go to `out`/`err`.
[[nodiscard]] int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
[[nodiscard]] int run_cli(int argc, char** argv);

}  // namespace entroute
