#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "entroute/descriptors.hpp"
#include "entroute/evaluation.hpp"
#include "entroute/heuristic_router.hpp"
#include "entroute/learned_router.hpp"
#include "entroute/probe_client.hpp"
#include "json.hpp"

namespace entroute {

/// Every tunable parameter, addressable by a flat key.
struct Settings {
  RouterConfig router;
  DescriptorConfig descriptor;
  ProbeConfig probe;
  UnifiedGainConfig gain;
  double vnr_floor = 1e-6;
  TrainConfig train;

  void validate() const;
};

/// All recognised keys in file order.
[[nodiscard]] const std::vector<std::string>& setting_keys();

/// Sets one key from its text form. Throws ValidationError naming the key for unknown
/// keys and unparsable values.
void apply_setting(Settings& s, std::string_view key, std::string_view value);

/// Applies "key = value" lines; '#' starts a comment. Later lines override earlier ones.
void read_settings(std::istream& in, const std::string& source, Settings& s);
void load_settings(const std::filesystem::path& path, Settings& s);

/// Writes every key in setting_keys() order; the output reads back to the same values.
void write_settings(std::ostream& out, const Settings& s);
void save_settings(const std::filesystem::path& path, const Settings& s);

[[nodiscard]] std::string setting_value(const Settings& s, std::string_view key);
[[nodiscard]] nlohmann::ordered_json settings_json(const Settings& s);

}  // namespace entroute
