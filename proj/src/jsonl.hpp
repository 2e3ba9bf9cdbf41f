#pragma once

// Internal helpers for the JSON Lines readers and writers. Not installed.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <stdexcept>
#include <string>

#include "entroute/errors.hpp"
#include "json.hpp"

namespace entroute::detail {

using json = nlohmann::json;

/// Thrown by field accessors; converted into ParseError with the line number.
struct FieldError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline const json& require(const json& obj, const char* key) {
  if (!obj.is_object()) throw FieldError("record is not a JSON object");
  auto it = obj.find(key);
  if (it == obj.end()) throw FieldError(std::string("missing field '") + key + "'");
  return *it;
}

inline std::string require_string(const json& obj, const char* key) {
  const json& v = require(obj, key);
  if (!v.is_string()) throw FieldError(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

inline double require_number(const json& obj, const char* key) {
  const json& v = require(obj, key);
  if (!v.is_number()) throw FieldError(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

inline std::int64_t require_integer(const json& obj, const char* key) {
  const json& v = require(obj, key);
  if (!v.is_number_integer()) throw FieldError(std::string("field '") + key + "' must be an integer");
  return v.get<std::int64_t>();
}

inline std::vector<double> require_numbers(const json& obj, const char* key) {
  const json& v = require(obj, key);
  if (!v.is_array()) throw FieldError(std::string("field '") + key + "' must be an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_number()) throw FieldError(std::string("field '") + key + "' must contain only numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

/// Calls `fn(record, line_no)` for every non-blank line. JSON syntax and field errors
/// become ParseError; ValidationError is re-thrown with the line attached.
inline void for_each_json_line(std::istream& in, const std::string& source,
                               const std::function<void(const json&, std::size_t)>& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(source, line_no, std::string("invalid JSON: ") + e.what());
    }
    try {
      fn(record, line_no);
    } catch (const FieldError& e) {
      throw ParseError(source, line_no, e.what());
    } catch (const json::exception& e) {
      throw ParseError(source, line_no, e.what());
    } catch (const ParseError&) {
      throw;
    } catch (const ValidationError& e) {
      throw ValidationError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  return in;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  return out;
}

/// Shortest decimal text that round-trips to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace entroute::detail
