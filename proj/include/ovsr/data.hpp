#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "ovsr/resample.hpp"
#include "ovsr/scheduler.hpp"
#include "ovsr/tensor.hpp"
#include "ovsr/tensor_io.hpp"

namespace ovsr {

// ---------------------------------------------------------------------------
// Degradation

struct DegradeConfig {
  double sigma = 1.6;
  int factor = 4;
  int radius = -1;  // -1: ceil(3 sigma)
};

inline Tensor degrade_frame(const Tensor& hr, const DegradeConfig& cfg = {}) {
  const Shape& s = hr.shape();
  if (s.h % cfg.factor != 0) throw DimensionError("height", "HR height not divisible by " + std::to_string(cfg.factor));
  if (s.w % cfg.factor != 0) throw DimensionError("width", "HR width not divisible by " + std::to_string(cfg.factor));
  return downsample(gaussian_blur(hr, cfg.sigma, cfg.radius), cfg.factor);
}

inline std::vector<Tensor> degrade(const std::vector<Tensor>& hr_clip, const DegradeConfig& cfg = {}) {
  std::vector<Tensor> out;
  out.reserve(hr_clip.size());
  for (const auto& f : hr_clip) out.push_back(degrade_frame(f, cfg));
  return out;
}

// HR clip -> sequence with LR frames attached.
inline VideoSequence make_sequence(std::vector<Tensor> hr_clip, const DegradeConfig& cfg = {},
                                   PaddingMode padding = PaddingMode::kReplicate) {
  VideoSequence seq;
  seq.lr = degrade(hr_clip, cfg);
  seq.hr = std::move(hr_clip);
  seq.scale = cfg.factor;
  seq.padding = padding;
  return seq;
}

// ---------------------------------------------------------------------------
// Synthetic clips

// SplitMix64 finalizer; derives independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct SynthConfig {
  int gratings = 2;
  int blobs = 6;
  double max_speed = 1.5;      // HR pixels per frame along each axis
  double min_frequency = 0.02;  // cycles per HR pixel
  double max_frequency = 0.10;
  double min_radius = 3.0;
  double max_radius = 14.0;
  double edge_width = 0.6;
  bool fixed_velocity = false;
  double velocity_x = 0.0;
  double velocity_y = 0.0;
};

// Analytic scene; frame t samples the scene translated by t * velocity, so
// consecutive frames are exact sub-pixel shifts of each other.
struct SynthScene {
  struct Grating {
    double fx, fy, phase;
    double amplitude[3];
  };
  struct Blob {
    double cx, cy, radius;
    double color[3];
  };
  double vx = 0, vy = 0;
  double background[3] = {0.5, 0.5, 0.5};
  std::vector<Grating> gratings;
  std::vector<Blob> blobs;
  double edge_width = 0.6;

  static SynthScene random(std::uint64_t seed, int height, int width, int frames, const SynthConfig& cfg) {
    std::mt19937_64 rng(mix_seed(seed, 0x5157));
    auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    SynthScene s;
    s.edge_width = cfg.edge_width;
    s.vx = cfg.fixed_velocity ? cfg.velocity_x : uniform(-cfg.max_speed, cfg.max_speed);
    s.vy = cfg.fixed_velocity ? cfg.velocity_y : uniform(-cfg.max_speed, cfg.max_speed);
    for (double& b : s.background) b = uniform(0.3, 0.7);
    for (int i = 0; i < cfg.gratings; ++i) {
      const double f = uniform(cfg.min_frequency, cfg.max_frequency);
      const double theta = uniform(0, std::numbers::pi);
      Grating g{f * std::cos(theta), f * std::sin(theta), uniform(0, 2 * std::numbers::pi), {}};
      const double amp = uniform(0.05, 0.2);
      for (double& a : g.amplitude) a = amp * uniform(0.5, 1.0);
      s.gratings.push_back(g);
    }
    // Blob centres cover everything the moving window will see.
    const double span = cfg.max_speed * std::max(frames, 1);
    for (int i = 0; i < cfg.blobs; ++i) {
      Blob b{uniform(-span, width + span), uniform(-span, height + span), uniform(cfg.min_radius, cfg.max_radius), {}};
      for (double& c : b.color) c = uniform(0.0, 1.0);
      s.blobs.push_back(b);
    }
    return s;
  }

  // Scene value at continuous scene coordinates.
  void sample(double x, double y, double rgb[3]) const {
    for (int c = 0; c < 3; ++c) rgb[c] = background[c];
    for (const auto& g : gratings) {
      const double v = std::sin(2 * std::numbers::pi * (g.fx * x + g.fy * y) + g.phase);
      for (int c = 0; c < 3; ++c) rgb[c] += g.amplitude[c] * v;
    }
    for (const auto& b : blobs) {
      const double d = std::hypot(x - b.cx, y - b.cy) - b.radius;
      // The logistic edge is flat to below 1e-17 beyond 40 edge widths.
      if (d > 40 * edge_width) continue;
      const double alpha = d < -40 * edge_width ? 1.0 : 1.0 / (1.0 + std::exp(d / edge_width));
      for (int c = 0; c < 3; ++c) rgb[c] = (1 - alpha) * rgb[c] + alpha * b.color[c];
    }
  }

  Tensor render(int t, int height, int width) const {
    Tensor f({1, 3, height, width});
    auto d = f.mutable_data();
    const std::int64_t plane = static_cast<std::int64_t>(height) * width;
    double rgb[3];
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        sample(x - vx * t, y - vy * t, rgb);
        for (int c = 0; c < 3; ++c) d[c * plane + y * width + x] = static_cast<Scalar>(std::clamp(rgb[c], 0.0, 1.0));
      }
    }
    return f;
  }
};

// T HR frames of shape (1, 3, H, W) with values in [0, 1]; reproducible from seed.
inline std::vector<Tensor> synth_clip(std::uint64_t seed, int frames, int height, int width,
                                      const SynthConfig& cfg = {}) {
  if (frames < 1) throw std::invalid_argument("synth_clip needs at least one frame");
  if (height % 4 != 0 || width % 4 != 0) throw DimensionError("height", "synthetic HR size must be divisible by 4");
  const SynthScene scene = SynthScene::random(seed, height, width, frames, cfg);
  std::vector<Tensor> clip;
  for (int t = 0; t < frames; ++t) clip.push_back(scene.render(t, height, width));
  return clip;
}

// ---------------------------------------------------------------------------
// Tensor plumbing (no gradients)

inline Tensor crop(const Tensor& x, std::int64_t y0, std::int64_t x0, std::int64_t h, std::int64_t w) {
  const Shape& s = x.shape();
  if (y0 < 0 || y0 + h > s.h) throw DimensionError("height", "crop outside image");
  if (x0 < 0 || x0 + w > s.w) throw DimensionError("width", "crop outside image");
  Tensor out({s.n, s.c, h, w});
  auto d = out.mutable_data();
  std::int64_t i = 0;
  for (std::int64_t n = 0; n < s.n; ++n)
    for (std::int64_t c = 0; c < s.c; ++c)
      for (std::int64_t y = 0; y < h; ++y)
        for (std::int64_t xx = 0; xx < w; ++xx) d[i++] = x.at(n, c, y0 + y, x0 + xx);
  return out;
}

// Stacks same-shaped tensors along the batch axis.
inline Tensor stack_batch(const std::vector<Tensor>& items) {
  if (items.empty()) throw DimensionError("batch", "nothing to stack");
  const Shape& s = items.front().shape();
  Tensor out({s.n * static_cast<std::int64_t>(items.size()), s.c, s.h, s.w});
  auto d = out.mutable_data();
  std::size_t offset = 0;
  for (const auto& t : items) {
    if (!(t.shape() == s)) throw DimensionError("batch", "stack of mismatched shapes");
    std::copy(t.data().begin(), t.data().end(), d.begin() + offset);
    offset += t.data().size();
  }
  return out;
}

inline Tensor clamp01(const Tensor& x) {
  Tensor out(x.shape());
  auto d = out.mutable_data();
  auto s = x.data();
  for (std::size_t i = 0; i < s.size(); ++i) d[i] = std::clamp<Scalar>(s[i], 0, 1);
  return out;
}

// ---------------------------------------------------------------------------
// Frame directories: binary PPM (P6, 8-bit RGB) files named %08d.ppm.

inline Tensor read_ppm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path);
  std::string magic;
  is >> magic;
  if (magic != "P6") throw FormatError(path + ": not a binary PPM");
  auto next_int = [&]() {
    is >> std::ws;
    while (is.peek() == '#') {
      std::string comment;
      std::getline(is, comment);
      is >> std::ws;
    }
    int v = -1;
    is >> v;
    return v;
  };
  const int w = next_int();
  const int h = next_int();
  const int maxval = next_int();
  if (!is || w <= 0 || h <= 0 || maxval != 255) throw FormatError(path + ": unsupported PPM header");
  is.get();
  std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * 3);
  is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!is) throw FormatError(path + ": truncated PPM payload");
  Tensor f({1, 3, h, w});
  auto d = f.mutable_data();
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
  for (std::int64_t p = 0; p < plane; ++p) {
    for (int c = 0; c < 3; ++c) d[c * plane + p] = static_cast<Scalar>(raw[p * 3 + c] / 255.0);
  }
  return f;
}

inline void write_ppm(const std::string& path, const Tensor& frame) {
  const Shape& s = frame.shape();
  if (s.n != 1 || s.c != 3) throw DimensionError("channels", "PPM frames must be (1,3,H,W), got " + s.str());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path);
  os << "P6\n" << s.w << " " << s.h << "\n255\n";
  std::vector<unsigned char> raw(static_cast<std::size_t>(s.h * s.w * 3));
  const std::int64_t plane = s.h * s.w;
  auto d = frame.data();
  for (std::int64_t p = 0; p < plane; ++p) {
    for (int c = 0; c < 3; ++c) {
      const double v = std::clamp<double>(d[c * plane + p], 0.0, 1.0);
      raw[p * 3 + c] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
  }
  os.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!os) throw FormatError("failed writing " + path);
}

inline std::string frame_filename(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%08d.ppm", index);
  return buf;
}

// Reads every *.ppm in `dir`, sorted by file name.
inline std::vector<Tensor> read_frame_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw FormatError(dir + ": not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".ppm") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw FormatError(dir + ": no .ppm frames");
  std::vector<Tensor> frames;
  for (const auto& f : files) frames.push_back(read_ppm(f.string()));
  for (const auto& f : frames) {
    if (!(f.shape() == frames.front().shape())) throw FormatError(dir + ": frames differ in size");
  }
  return frames;
}

inline void write_frame_dir(const std::string& dir, const std::vector<Tensor>& frames) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    write_ppm((std::filesystem::path(dir) / frame_filename(static_cast<int>(i))).string(), frames[i]);
  }
}

}  // namespace ovsr
