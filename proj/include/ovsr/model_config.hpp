#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ovsr {

enum class Framework { kIvsr, kRvsr, kHvsr, kLovsr, kGovsr };

// Residual base added to the precursor's upscaled output to form SR_p.
enum class PrecursorBase { kBicubic, kZero };

// kPrecursor: SR = SR_s + SR_p. kBicubic: SR = SR_s + bicubic(I_t) (the
// "+Bicubic" comparison setting).
enum class RefineMode { kPrecursor, kBicubic };

class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

inline std::string to_string(Framework f) {
  switch (f) {
    case Framework::kIvsr: return "ivsr";
    case Framework::kRvsr: return "rvsr";
    case Framework::kHvsr: return "hvsr";
    case Framework::kLovsr: return "lovsr";
    case Framework::kGovsr: return "govsr";
  }
  return "?";
}

inline std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

inline Framework parse_framework(const std::string& text) {
  const std::string s = lowercase(text);
  if (s == "ivsr") return Framework::kIvsr;
  if (s == "rvsr") return Framework::kRvsr;
  if (s == "hvsr") return Framework::kHvsr;
  if (s == "lovsr") return Framework::kLovsr;
  // "OVSR-P+S-F" names the shared architecture of LOVSR and GOVSR.
  if (s == "govsr" || s == "ovsr") return Framework::kGovsr;
  throw ConfigError("framework", "unknown framework '" + text + "'");
}

inline bool is_omniscient(Framework f) { return f == Framework::kLovsr || f == Framework::kGovsr; }

struct ModelConfig {
  Framework framework = Framework::kGovsr;
  int blocks_precursor = 4;
  int blocks_successor = 2;
  int filters = 56;
  int scale = 4;
  double leaky_slope = 0.2;
  // 3 frames; 4 adds I_{t+2} as an extra stream (HVSR only).
  int window = 3;
  int image_channels = 3;
  // Output width of every non-final upscale conv; 0 selects 4 * filters.
  int upscale_width = 48;
  PrecursorBase precursor_base = PrecursorBase::kBicubic;
  RefineMode refine = RefineMode::kPrecursor;

  bool has_precursor() const { return is_omniscient(framework) && blocks_precursor > 0; }
  int effective_upscale_width() const { return upscale_width > 0 ? upscale_width : 4 * filters; }

  // "govsr-4+2-56" style identifier.
  std::string name() const {
    std::ostringstream os;
    os << to_string(framework) << "-";
    if (is_omniscient(framework)) os << blocks_precursor << "+" << blocks_successor;
    else os << blocks_successor;
    os << "-" << filters;
    if (window != 3) os << "-w" << window;
    return os.str();
  }

  void validate() const {
    if (blocks_precursor < 0) throw ConfigError("blocks_precursor", "must be >= 0");
    if (blocks_successor < 0) throw ConfigError("blocks_successor", "must be >= 0");
    if (blocks_precursor + blocks_successor < 1) throw ConfigError("blocks", "need at least one block");
    if (!is_omniscient(framework) && blocks_precursor != 0) {
      throw ConfigError("blocks_precursor", to_string(framework) + " has no precursor network");
    }
    if (filters < 1) throw ConfigError("filters", "must be >= 1");
    if (scale < 2 || (scale & (scale - 1)) != 0) throw ConfigError("scale", "must be a power of 2 >= 2");
    if (!(leaky_slope > 0 && leaky_slope < 1)) throw ConfigError("leaky_slope", "must lie in (0, 1)");
    if (window != 3 && window != 4) throw ConfigError("window", "must be 3 or 4");
    if (window == 4 && framework != Framework::kHvsr) {
      throw ConfigError("window", "a 4-frame window is only defined for hvsr");
    }
    if (image_channels < 1) throw ConfigError("image_channels", "must be >= 1");
    if (upscale_width < 0 || effective_upscale_width() % 4 != 0) {
      throw ConfigError("upscale_width", "must be a positive multiple of 4 (or 0)");
    }
  }
};

// Parses "P+S" or a single "S" block count.
inline void parse_blocks(const std::string& text, ModelConfig& cfg) {
  try {
    const auto plus = text.find('+');
    std::size_t used = 0;
    if (plus == std::string::npos) {
      cfg.blocks_precursor = 0;
      cfg.blocks_successor = std::stoi(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
    } else {
      const std::string p = text.substr(0, plus);
      const std::string s = text.substr(plus + 1);
      cfg.blocks_precursor = std::stoi(p, &used);
      if (used != p.size()) throw std::invalid_argument(text);
      cfg.blocks_successor = std::stoi(s, &used);
      if (used != s.size()) throw std::invalid_argument(text);
    }
  } catch (const std::logic_error&) {
    throw ConfigError("blocks", "expected P+S or S, got '" + text + "'");
  }
}

inline std::string blocks_string(const ModelConfig& cfg) {
  if (!is_omniscient(cfg.framework)) return std::to_string(cfg.blocks_successor);
  return std::to_string(cfg.blocks_precursor) + "+" + std::to_string(cfg.blocks_successor);
}

// Parses identifiers such as "govsr-8+4-80", "OVSR-4+2-56" or "hvsr-5-64".
inline ModelConfig parse_model_name(const std::string& name) {
  std::vector<std::string> parts;
  std::stringstream ss(name);
  for (std::string item; std::getline(ss, item, '-');) parts.push_back(item);
  if (parts.size() < 3 || parts.size() > 4) {
    throw ConfigError("model", "expected FRAMEWORK-BLOCKS-FILTERS, got '" + name + "'");
  }
  ModelConfig cfg;
  cfg.framework = parse_framework(parts[0]);
  parse_blocks(parts[1], cfg);
  if (!is_omniscient(cfg.framework) && parts[1].find('+') != std::string::npos) {
    if (cfg.blocks_precursor != 0) throw ConfigError("blocks", "baselines take a single block count");
  }
  try {
    cfg.filters = std::stoi(parts[2]);
  } catch (const std::logic_error&) {
    throw ConfigError("filters", "not a number: '" + parts[2] + "'");
  }
  if (parts.size() == 4) {
    if (parts[3] != "w4" && parts[3] != "w3") throw ConfigError("window", "unknown suffix '" + parts[3] + "'");
    cfg.window = parts[3] == "w4" ? 4 : 3;
  }
  cfg.validate();
  return cfg;
}

// key=value serialization shared by checkpoints and resolved-config echoes.
inline std::map<std::string, std::string> to_key_values(const ModelConfig& cfg) {
  std::map<std::string, std::string> kv;
  kv["framework"] = to_string(cfg.framework);
  kv["blocks"] = blocks_string(cfg);
  kv["filters"] = std::to_string(cfg.filters);
  kv["scale"] = std::to_string(cfg.scale);
  std::ostringstream slope;
  slope.precision(17);
  slope << cfg.leaky_slope;
  kv["leaky_slope"] = slope.str();
  kv["window"] = std::to_string(cfg.window);
  kv["image_channels"] = std::to_string(cfg.image_channels);
  kv["upscale_width"] = std::to_string(cfg.upscale_width);
  kv["precursor_base"] = cfg.precursor_base == PrecursorBase::kBicubic ? "bicubic" : "zero";
  kv["refine"] = cfg.refine == RefineMode::kPrecursor ? "precursor" : "bicubic";
  return kv;
}

inline int parse_int_field(const std::string& field, const std::string& value) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError(field, "expected an integer, got '" + value + "'");
  }
}

inline double parse_double_field(const std::string& field, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError(field, "expected a number, got '" + value + "'");
  }
}

// Applies one model key; returns false when `key` is not a model field.
inline bool apply_model_key(ModelConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "model") {
    const ModelConfig parsed = parse_model_name(value);
    cfg.framework = parsed.framework;
    cfg.blocks_precursor = parsed.blocks_precursor;
    cfg.blocks_successor = parsed.blocks_successor;
    cfg.filters = parsed.filters;
    cfg.window = parsed.window;
  } else if (key == "framework") {
    cfg.framework = parse_framework(value);
  } else if (key == "blocks") {
    parse_blocks(value, cfg);
  } else if (key == "filters") {
    cfg.filters = parse_int_field(key, value);
  } else if (key == "scale") {
    cfg.scale = parse_int_field(key, value);
  } else if (key == "leaky_slope") {
    cfg.leaky_slope = parse_double_field(key, value);
  } else if (key == "window") {
    cfg.window = parse_int_field(key, value);
  } else if (key == "image_channels") {
    cfg.image_channels = parse_int_field(key, value);
  } else if (key == "upscale_width") {
    cfg.upscale_width = parse_int_field(key, value);
  } else if (key == "precursor_base") {
    if (value == "bicubic") cfg.precursor_base = PrecursorBase::kBicubic;
    else if (value == "zero") cfg.precursor_base = PrecursorBase::kZero;
    else throw ConfigError(key, "expected bicubic|zero, got '" + value + "'");
  } else if (key == "refine") {
    if (value == "precursor") cfg.refine = RefineMode::kPrecursor;
    else if (value == "bicubic") cfg.refine = RefineMode::kBicubic;
    else throw ConfigError(key, "expected precursor|bicubic, got '" + value + "'");
  } else {
    return false;
  }
  return true;
}

inline ModelConfig model_config_from(const std::map<std::string, std::string>& kv) {
  ModelConfig cfg;
  for (const auto& [k, v] : kv) apply_model_key(cfg, k, v);
  cfg.validate();
  return cfg;
}

}  // namespace ovsr
