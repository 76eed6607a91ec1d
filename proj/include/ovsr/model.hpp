#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ovsr/generator.hpp"
#include "ovsr/model_config.hpp"
#include "ovsr/tensor_io.hpp"

namespace ovsr {

inline GeneratorSpec precursor_spec(const ModelConfig& cfg) {
  return {cfg.window, cfg.filters, cfg.blocks_precursor, cfg.image_channels,
          cfg.scale,  cfg.effective_upscale_width(), cfg.leaky_slope};
}

// Net_s for the omniscient frameworks; the single generator G otherwise.
inline GeneratorSpec successor_spec(const ModelConfig& cfg) {
  return {cfg.window, cfg.filters, cfg.blocks_successor, cfg.image_channels,
          cfg.scale,  cfg.effective_upscale_width(), cfg.leaky_slope};
}

struct Model {
  ModelConfig config;
  std::optional<GeneratorParams> precursor;
  GeneratorParams successor;

  // Stable, ordered parameter list: precursor first, then successor/generator.
  std::vector<std::pair<std::string, Tensor*>> named_parameters() {
    std::vector<std::pair<std::string, Tensor*>> out;
    if (precursor) {
      for (auto& [name, t] : precursor->named_tensors()) out.emplace_back("precursor." + name, t);
    }
    const std::string prefix = is_omniscient(config.framework) ? "successor." : "generator.";
    for (auto& [name, t] : successor.named_tensors()) out.emplace_back(prefix + name, t);
    return out;
  }

  std::vector<Tensor*> parameters() {
    std::vector<Tensor*> out;
    for (auto& [name, t] : named_parameters()) out.push_back(t);
    return out;
  }
};

inline Model make_model(const ModelConfig& cfg) {
  cfg.validate();
  Model m;
  m.config = cfg;
  if (cfg.has_precursor()) m.precursor = make_generator(precursor_spec(cfg));
  m.successor = make_generator(successor_spec(cfg));
  return m;
}

inline Model init_model(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  Model m;
  m.config = cfg;
  if (cfg.has_precursor()) m.precursor = init_generator(precursor_spec(cfg), rng);
  m.successor = init_generator(successor_spec(cfg), rng);
  return m;
}

struct ParameterCount {
  std::int64_t precursor = 0;
  std::int64_t successor = 0;
  std::int64_t total() const { return precursor + successor; }
};

// Exact weight + bias count; a pure function of the config.
inline ParameterCount count_parameters(const ModelConfig& cfg) {
  cfg.validate();
  ParameterCount c;
  if (cfg.has_precursor()) c.precursor = count_parameters(precursor_spec(cfg));
  c.successor = count_parameters(successor_spec(cfg));
  return c;
}

// Checkpoint layout: a text header
//   OVSR-CHECKPOINT 1
//   config <key>=<value>        (one line per ModelConfig field)
//   tensor <name> n c h w       (manifest, in payload order)
//   end
// followed by one binary tensor dump per manifest entry.
inline void save_checkpoint(const std::string& path, Model& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path);
  os << "OVSR-CHECKPOINT 1\n";
  for (const auto& [k, v] : to_key_values(model.config)) os << "config " << k << "=" << v << "\n";
  const auto params = model.named_parameters();
  for (const auto& [name, t] : params) {
    const Shape& s = t->shape();
    os << "tensor " << name << " " << s.n << " " << s.c << " " << s.h << " " << s.w << "\n";
  }
  os << "end\n";
  for (const auto& [name, t] : params) write_tensor(os, *t);
  if (!os) throw FormatError("failed writing " + path);
}

inline Model load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path);
  std::string line;
  if (!std::getline(is, line) || line != "OVSR-CHECKPOINT 1") throw FormatError(path + ": not a checkpoint");
  std::map<std::string, std::string> kv;
  std::vector<std::pair<std::string, Shape>> manifest;
  while (std::getline(is, line) && line != "end") {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "config") {
      std::string entry;
      ls >> entry;
      const auto eq = entry.find('=');
      if (eq == std::string::npos) throw FormatError(path + ": malformed config line");
      kv[entry.substr(0, eq)] = entry.substr(eq + 1);
    } else if (tag == "tensor") {
      std::string name;
      Shape s;
      ls >> name >> s.n >> s.c >> s.h >> s.w;
      if (!ls) throw FormatError(path + ": malformed manifest line");
      manifest.emplace_back(name, s);
    } else {
      throw FormatError(path + ": unexpected header line '" + line + "'");
    }
  }
  if (line != "end") throw FormatError(path + ": missing header terminator");
  Model model = make_model(model_config_from(kv));
  auto params = model.named_parameters();
  if (params.size() != manifest.size()) throw FormatError(path + ": manifest does not match config");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].first != manifest[i].first || !(params[i].second->shape() == manifest[i].second)) {
      throw FormatError(path + ": manifest entry '" + manifest[i].first + "' does not match the model");
    }
    Tensor t = read_tensor(is);
    if (!(t.shape() == manifest[i].second)) throw FormatError(path + ": payload shape mismatch");
    *params[i].second = t;
  }
  return model;
}

}  // namespace ovsr
