#include "entroute/config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <ostream>

#include "entroute/errors.hpp"
#include "jsonl.hpp"

namespace entroute {

void Settings::validate() const {
  router.validate();
  descriptor.validate();
  probe.validate();
  gain.validate();
  train.validate();
  if (!(vnr_floor >= 0.0)) throw ValidationError("vnr_floor must be >= 0");
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ValidationError("config key '" + std::string(key) + "': '" + std::string(v) + "' is not a number");
  }
  return out;
}

template <typename Int>
Int to_int(std::string_view key, std::string_view v) {
  Int out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ValidationError("config key '" + std::string(key) + "': '" + std::string(v) + "' is not an integer");
  }
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ValidationError("config key '" + std::string(key) + "': '" + std::string(v) + "' is not a boolean");
}

std::string fmt(double v) { return detail::format_double(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

struct Field {
  std::function<void(Settings&, std::string_view, std::string_view)> set;
  std::function<std::string(const Settings&)> get;
};

template <typename T>
Field number_field(T Settings::*group, double T::*member) {
  return {[=](Settings& s, std::string_view k, std::string_view v) { (s.*group).*member = to_double(k, v); },
          [=](const Settings& s) { return fmt((s.*group).*member); }};
}

template <typename T, typename Int>
Field int_field(T Settings::*group, Int T::*member) {
  return {[=](Settings& s, std::string_view k, std::string_view v) { (s.*group).*member = to_int<Int>(k, v); },
          [=](const Settings& s) { return std::to_string((s.*group).*member); }};
}

template <typename T>
Field bool_field(T Settings::*group, bool T::*member) {
  return {[=](Settings& s, std::string_view k, std::string_view v) { (s.*group).*member = to_bool(k, v); },
          [=](const Settings& s) { return fmt((s.*group).*member); }};
}

template <typename T>
Field string_field(T Settings::*group, std::string T::*member) {
  return {[=](Settings& s, std::string_view, std::string_view v) { (s.*group).*member = std::string(v); },
          [=](const Settings& s) { return (s.*group).*member; }};
}

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = [] {
    std::vector<std::pair<std::string, Field>> t;
    t.emplace_back("k", number_field(&Settings::router, &RouterConfig::k));
    t.emplace_back("s_h_threshold", number_field(&Settings::router, &RouterConfig::s_h_threshold));
    t.emplace_back("enable_fallback", bool_field(&Settings::router, &RouterConfig::enable_fallback));
    t.emplace_back("use_s_h_guardrail", bool_field(&Settings::router, &RouterConfig::use_s_h_guardrail));
    t.emplace_back("use_volatility", bool_field(&Settings::router, &RouterConfig::use_volatility));
    t.emplace_back("epsilon", number_field(&Settings::descriptor, &DescriptorConfig::epsilon));
    t.emplace_back("probe_length",
                   Field{[](Settings& s, std::string_view k, std::string_view v) {
                           s.descriptor.probe_length = to_int<std::size_t>(k, v);
                           s.probe.probe_length = s.descriptor.probe_length;
                         },
                         [](const Settings& s) { return std::to_string(s.descriptor.probe_length); }});
    t.emplace_back("endpoint", string_field(&Settings::probe, &ProbeConfig::endpoint));
    t.emplace_back("path", string_field(&Settings::probe, &ProbeConfig::path));
    t.emplace_back("api", Field{[](Settings& s, std::string_view k, std::string_view v) {
                                  try {
                                    s.probe.api = parse_api_kind(v);
                                  } catch (const ValidationError& e) {
                                    throw ValidationError("config key '" + std::string(k) + "': " + e.what());
                                  }
                                },
                                [](const Settings& s) { return std::string(to_string(s.probe.api)); }});
    t.emplace_back("model", string_field(&Settings::probe, &ProbeConfig::model));
    t.emplace_back("top_k", int_field(&Settings::probe, &ProbeConfig::top_k));
    t.emplace_back("timeout_ms", int_field(&Settings::probe, &ProbeConfig::timeout_ms));
    t.emplace_back("max_parallel", int_field(&Settings::probe, &ProbeConfig::max_parallel));
    t.emplace_back("max_retries", int_field(&Settings::probe, &ProbeConfig::max_retries));
    t.emplace_back("retry_backoff_ms", int_field(&Settings::probe, &ProbeConfig::retry_backoff_ms));
    t.emplace_back("max_tokens", int_field(&Settings::probe, &ProbeConfig::max_tokens));
    t.emplace_back("api_key_env", string_field(&Settings::probe, &ProbeConfig::api_key_env));
    t.emplace_back("include_residual", bool_field(&Settings::probe, &ProbeConfig::include_residual));
    t.emplace_back("lambda", number_field(&Settings::gain, &UnifiedGainConfig::lambda));
    t.emplace_back("token_scale", number_field(&Settings::gain, &UnifiedGainConfig::token_scale));
    t.emplace_back("vnr_floor", Field{[](Settings& s, std::string_view k, std::string_view v) {
                                        s.vnr_floor = to_double(k, v);
                                      },
                                      [](const Settings& s) { return fmt(s.vnr_floor); }});
    t.emplace_back("hidden_dim", int_field(&Settings::train, &TrainConfig::hidden_dim));
    t.emplace_back("learning_rate", number_field(&Settings::train, &TrainConfig::learning_rate));
    t.emplace_back("batch_size", int_field(&Settings::train, &TrainConfig::batch_size));
    t.emplace_back("weight_decay", number_field(&Settings::train, &TrainConfig::weight_decay));
    t.emplace_back("epochs", int_field(&Settings::train, &TrainConfig::epochs));
    return t;
  }();
  return table;
}

const Field& field(std::string_view key) {
  for (const auto& [name, f] : fields()) {
    if (name == key) return f;
  }
  throw ValidationError("unknown config key '" + std::string(key) + "'");
}

}  // namespace

const std::vector<std::string>& setting_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, f] : fields()) k.push_back(name);
    return k;
  }();
  return keys;
}

void apply_setting(Settings& s, std::string_view key, std::string_view value) {
  field(trim(key)).set(s, trim(key), trim(value));
}

std::string setting_value(const Settings& s, std::string_view key) { return field(key).get(s); }

void read_settings(std::istream& in, const std::string& source, Settings& s) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) throw ParseError(source, line_no, "expected 'key = value'");
    try {
      apply_setting(s, view.substr(0, eq), view.substr(eq + 1));
    } catch (const ValidationError& e) {
      throw ParseError(source, line_no, e.what());
    }
  }
}

void load_settings(const std::filesystem::path& path, Settings& s) {
  auto in = detail::open_input(path);
  read_settings(in, path.string(), s);
}

void write_settings(std::ostream& out, const Settings& s) {
  for (const auto& [name, f] : fields()) out << name << " = " << f.get(s) << '\n';
}

void save_settings(const std::filesystem::path& path, const Settings& s) {
  auto out = detail::open_output(path);
  write_settings(out, s);
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

nlohmann::ordered_json settings_json(const Settings& s) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [name, f] : fields()) j[name] = f.get(s);
  return j;
}

}  // namespace entroute
