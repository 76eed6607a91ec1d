#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ovsr/model_config.hpp"
#include "ovsr/ops.hpp"
#include "ovsr/tensor.hpp"

namespace ovsr {

// Architecture of one multi-stream generator (Net_p, Net_s, or the single
// network of the baselines).
struct GeneratorSpec {
  int streams = 3;
  int filters = 56;
  int blocks = 2;
  int image_channels = 3;
  int scale = 4;
  int upscale_width = 48;
  double slope = 0.2;

  friend bool operator==(const GeneratorSpec&, const GeneratorSpec&) = default;
};

// One convolution of the layer walk. `resolution` is the layer's spatial
// multiplier relative to the LR frame.
struct LayerSpec {
  std::string name;
  int in = 0;
  int out = 0;
  int kernel = 3;
  int resolution = 1;
  bool activated = true;

  std::int64_t parameters() const {
    return static_cast<std::int64_t>(in) * out * kernel * kernel + out;
  }
  std::int64_t weights() const { return static_cast<std::int64_t>(in) * out * kernel * kernel; }
};

inline int upscale_stages(int scale) {
  int stages = 0;
  while ((1 << stages) < scale) ++stages;
  return stages;
}

// Every convolution of the generator in execution order. Parameter and FLOP
// accounting and weight initialization are all derived from this list.
inline std::vector<LayerSpec> layer_specs(const GeneratorSpec& g) {
  std::vector<LayerSpec> layers;
  const int f = g.filters;
  for (int k = 0; k < g.streams; ++k) {
    layers.push_back({"fusion." + std::to_string(k), g.image_channels + f, f, 3, 1, true});
  }
  for (int b = 0; b < g.blocks; ++b) {
    const std::string p = "pfrb." + std::to_string(b);
    for (int k = 0; k < g.streams; ++k) layers.push_back({p + ".stage1." + std::to_string(k), f, f, 3, 1, true});
    layers.push_back({p + ".merge", g.streams * f, f, 1, 1, true});
    for (int k = 0; k < g.streams; ++k) layers.push_back({p + ".stage2." + std::to_string(k), 2 * f, f, 3, 1, true});
  }
  layers.push_back({"tail", g.streams * f, f, 3, 1, true});
  const int stages = upscale_stages(g.scale);
  int in = f;
  for (int s = 0; s < stages; ++s) {
    const bool last = s + 1 == stages;
    const int out = last ? 4 * g.image_channels : g.upscale_width;
    layers.push_back({"upscale." + std::to_string(s), in, out, 3, 1 << s, !last});
    in = out / 4;
  }
  return layers;
}

inline std::int64_t count_parameters(const GeneratorSpec& g) {
  std::int64_t total = 0;
  for (const auto& l : layer_specs(g)) total += l.parameters();
  return total;
}

struct ConvParams {
  Tensor weight;
  Tensor bias;
};

struct PfrbParams {
  std::vector<ConvParams> stage1;
  ConvParams merge;
  std::vector<ConvParams> stage2;
};

struct GeneratorParams {
  GeneratorSpec spec;
  std::vector<ConvParams> fusion;
  std::vector<PfrbParams> blocks;
  ConvParams tail;
  std::vector<ConvParams> upscale;

  // Convolutions in layer_specs() order.
  std::vector<ConvParams*> convs() {
    std::vector<ConvParams*> out;
    for (auto& c : fusion) out.push_back(&c);
    for (auto& b : blocks) {
      for (auto& c : b.stage1) out.push_back(&c);
      out.push_back(&b.merge);
      for (auto& c : b.stage2) out.push_back(&c);
    }
    out.push_back(&tail);
    for (auto& c : upscale) out.push_back(&c);
    return out;
  }

  std::vector<std::pair<std::string, Tensor*>> named_tensors() {
    std::vector<std::pair<std::string, Tensor*>> out;
    const auto specs = layer_specs(spec);
    auto convs_list = convs();
    for (std::size_t i = 0; i < specs.size(); ++i) {
      out.emplace_back(specs[i].name + ".weight", &convs_list[i]->weight);
      out.emplace_back(specs[i].name + ".bias", &convs_list[i]->bias);
    }
    return out;
  }
};

// Builds zero-valued parameters with the right shapes.
inline GeneratorParams make_generator(const GeneratorSpec& spec) {
  GeneratorParams p;
  p.spec = spec;
  auto make = [](const LayerSpec& l) {
    return ConvParams{Tensor::zeros({l.out, l.in, l.kernel, l.kernel}), Tensor::zeros({1, l.out, 1, 1})};
  };
  const auto specs = layer_specs(spec);
  std::size_t i = 0;
  for (int k = 0; k < spec.streams; ++k) p.fusion.push_back(make(specs[i++]));
  for (int b = 0; b < spec.blocks; ++b) {
    PfrbParams block;
    for (int k = 0; k < spec.streams; ++k) block.stage1.push_back(make(specs[i++]));
    block.merge = make(specs[i++]);
    for (int k = 0; k < spec.streams; ++k) block.stage2.push_back(make(specs[i++]));
    p.blocks.push_back(std::move(block));
  }
  p.tail = make(specs[i++]);
  while (i < specs.size()) p.upscale.push_back(make(specs[i++]));
  return p;
}

// He-style normal init scaled for leaky ReLU; zero biases. The final upscale
// conv is scaled by `output_gain` so the initial residual stays small.
inline GeneratorParams init_generator(const GeneratorSpec& spec, std::mt19937_64& rng, double output_gain = 0.1) {
  GeneratorParams p = make_generator(spec);
  const auto specs = layer_specs(spec);
  auto convs = p.convs();
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const double fan_in = static_cast<double>(specs[i].in) * specs[i].kernel * specs[i].kernel;
    const double gain = i + 1 == specs.size() ? output_gain : 1.0;
    const double stddev = gain * std::sqrt(2.0 / (fan_in * (1.0 + spec.slope * spec.slope)));
    std::normal_distribution<double> dist(0.0, stddev);
    Tensor w(convs[i]->weight.shape());
    for (auto& v : w.mutable_data()) v = static_cast<Scalar>(dist(rng));
    convs[i]->weight = w;
  }
  return p;
}

// Per-layer execution log used for introspection and FLOP cross-checks.
struct LayerEvent {
  std::string name;
  Shape input;
  Shape output;
  bool activated = false;
  std::int64_t macs = 0;  // per batch sample
};

struct LayerRecorder {
  std::vector<LayerEvent> events;
};

namespace detail {

inline Tensor conv_layer(const Tensor& x, const ConvParams& p, bool activate, double slope,
                         LayerRecorder* rec, const std::string& name) {
  Tensor y = conv2d(x, p.weight, p.bias, Padding::kSame);
  if (rec != nullptr) {
    const Shape& ws = p.weight.shape();
    rec->events.push_back({name, x.shape(), y.shape(), activate,
                           ws.n * ws.c * ws.h * ws.w * y.shape().h * y.shape().w});
  }
  return activate ? leaky_relu(y, static_cast<Scalar>(slope)) : y;
}

}  // namespace detail

// Stream k: leaky(conv(concat(frame_k, hidden_k))). Streams are ordered past,
// present, future (, far future).
inline std::vector<Tensor> fusion_head(std::span<const Tensor> frames, std::span<const Tensor> hiddens,
                                       const GeneratorParams& params, LayerRecorder* rec = nullptr) {
  const auto streams = static_cast<std::size_t>(params.spec.streams);
  if (frames.size() != streams || hiddens.size() != streams) {
    throw DimensionError("streams", "fusion head expects " + std::to_string(streams) + " frames and hiddens");
  }
  std::vector<Tensor> out;
  for (std::size_t k = 0; k < streams; ++k) {
    const Shape& fs = frames[k].shape();
    const Shape& hs = hiddens[k].shape();
    if (fs.h != hs.h) throw DimensionError("height", "frame " + fs.str() + " vs hidden " + hs.str());
    if (fs.w != hs.w) throw DimensionError("width", "frame " + fs.str() + " vs hidden " + hs.str());
    out.push_back(detail::conv_layer(concat_channels({frames[k], hiddens[k]}), params.fusion[k], true,
                                     params.spec.slope, rec, "fusion." + std::to_string(k)));
  }
  return out;
}

// Progressive fusion residual block over all streams.
inline std::vector<Tensor> pfrb_forward(std::span<const Tensor> streams, const PfrbParams& params,
                                        double slope, LayerRecorder* rec = nullptr,
                                        const std::string& name = "pfrb") {
  const std::size_t n = params.stage1.size();
  if (streams.size() != n) {
    throw DimensionError("streams", "block expects " + std::to_string(n) + " streams, got " +
                                        std::to_string(streams.size()));
  }
  std::vector<Tensor> first;
  for (std::size_t k = 0; k < n; ++k) {
    first.push_back(detail::conv_layer(streams[k], params.stage1[k], true, slope, rec,
                                       name + ".stage1." + std::to_string(k)));
  }
  const Tensor merged = detail::conv_layer(concat_channels(first), params.merge, true, slope, rec, name + ".merge");
  std::vector<Tensor> out;
  for (std::size_t k = 0; k < n; ++k) {
    const Tensor y = detail::conv_layer(concat_channels({first[k], merged}), params.stage2[k], true, slope, rec,
                                        name + ".stage2." + std::to_string(k));
    out.push_back(add(streams[k], y));
  }
  return out;
}

inline Tensor emit_hidden(std::span<const Tensor> streams, const ConvParams& tail, double slope,
                          LayerRecorder* rec = nullptr) {
  return detail::conv_layer(concat_channels(streams), tail, true, slope, rec, "tail");
}

// log2(scale) stages of conv + pixel_shuffle(2); no activation after the last conv.
inline Tensor upscale(const Tensor& hidden, std::span<const ConvParams> stages, double slope,
                      LayerRecorder* rec = nullptr) {
  if (stages.empty()) throw DimensionError("scale", "upscale module has no stages");
  Tensor x = hidden;
  for (std::size_t s = 0; s < stages.size(); ++s) {
    const bool last = s + 1 == stages.size();
    x = pixel_shuffle(detail::conv_layer(x, stages[s], false, slope, rec, "upscale." + std::to_string(s)), 2);
    if (!last) {
      // Leaky ReLU commutes with the shuffle permutation.
      x = leaky_relu(x, static_cast<Scalar>(slope));
      if (rec != nullptr) rec->events.back().activated = true;
    }
  }
  return x;
}

struct GeneratorOutput {
  Tensor hidden;    // updated hidden state, (B, F, h, w)
  Tensor residual;  // upscaled image, (B, C_img, scale*h, scale*w)
};

inline GeneratorOutput generator_forward(const GeneratorParams& params, std::span<const Tensor> frames,
                                         std::span<const Tensor> hiddens, LayerRecorder* rec = nullptr) {
  std::vector<Tensor> streams = fusion_head(frames, hiddens, params, rec);
  for (std::size_t b = 0; b < params.blocks.size(); ++b) {
    streams = pfrb_forward(streams, params.blocks[b], params.spec.slope, rec, "pfrb." + std::to_string(b));
  }
  GeneratorOutput out;
  out.hidden = emit_hidden(streams, params.tail, params.spec.slope, rec);
  out.residual = upscale(out.hidden, params.upscale, params.spec.slope, rec);
  return out;
}

}  // namespace ovsr
