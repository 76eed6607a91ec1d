#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ovsr/model_config.hpp"

namespace ovsr {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Plain-text config: one key=value per line, '#' starts a comment. Order is
// kept; later keys override earlier ones when applied.
inline KeyValues parse_key_values(std::istream& is, const std::string& origin = "config") {
  KeyValues kv;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno), "expected key=value, got '" + line + "'");
    }
    kv.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return kv;
}

inline KeyValues read_key_values(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config", "cannot open " + path);
  return parse_key_values(is, path);
}

inline std::string format_key_values(const KeyValues& kv) {
  std::ostringstream os;
  for (const auto& [k, v] : kv) os << k << "=" << v << "\n";
  return os.str();
}

inline bool parse_bool_field(const std::string& field, const std::string& value) {
  const std::string v = lowercase(value);
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError(field, "expected a boolean, got '" + value + "'");
}

inline std::int64_t parse_int64_field(const std::string& field, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError(field, "expected an integer, got '" + value + "'");
  }
}

// Shortest text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace ovsr
