#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ovsr/autodiff.hpp"
#include "ovsr/generator.hpp"
#include "ovsr/model.hpp"
#include "ovsr/parallel.hpp"
#include "ovsr/scheduler.hpp"
#include "ovsr/tensor.hpp"

namespace ovsr {

struct EvalProtocol {
  int skip_frames = 2;   // dropped at each end of a sequence
  int border_crop = 8;   // pixels removed on every side
  double peak = 255.0;

  void validate() const {
    if (skip_frames < 0) throw ConfigError("skip_frames", "must be >= 0");
    if (border_crop < 0) throw ConfigError("border_crop", "must be >= 0");
    if (!(peak > 0)) throw ConfigError("peak", "must be positive");
  }
};

// BT.601 studio-swing luma on the 0..255 scale: (B, 3, H, W) -> (B, 1, H, W).
inline Tensor to_luminance(const Tensor& rgb) {
  const Shape& s = rgb.shape();
  if (s.c != 3) throw DimensionError("channels", "luminance needs 3 channels, got " + s.str());
  Tensor y({s.n, 1, s.h, s.w});
  auto out = y.mutable_data();
  auto in = rgb.data();
  const std::int64_t plane = s.plane();
  for (std::int64_t n = 0; n < s.n; ++n) {
    const Scalar* r = in.data() + n * 3 * plane;
    const Scalar* g = r + plane;
    const Scalar* b = g + plane;
    Scalar* dst = out.data() + n * plane;
    for (std::int64_t i = 0; i < plane; ++i) {
      dst[i] = static_cast<Scalar>(65.481 * r[i] + 128.553 * g[i] + 24.966 * b[i] + 16.0);
    }
  }
  return y;
}

namespace detail {

inline Tensor crop_border(const Tensor& x, int border) {
  const Shape& s = x.shape();
  const std::int64_t h = s.h - 2 * border;
  const std::int64_t w = s.w - 2 * border;
  if (h <= 0 || w <= 0) throw DimensionError("height", "border crop leaves an empty region of " + s.str());
  Tensor out({s.n, s.c, h, w});
  auto d = out.mutable_data();
  std::size_t i = 0;
  for (std::int64_t n = 0; n < s.n; ++n)
    for (std::int64_t c = 0; c < s.c; ++c)
      for (std::int64_t y = 0; y < h; ++y)
        for (std::int64_t xx = 0; xx < w; ++xx) d[i++] = x.at(n, c, y + border, xx + border);
  return out;
}

// Luminance (for RGB input) after the border crop.
inline Tensor prepare(const Tensor& frame, const EvalProtocol& p) {
  return crop_border(to_luminance(frame), p.border_crop);
}

inline void require_pair(const Tensor& a, const Tensor& b) {
  if (!(a.shape() == b.shape())) throw DimensionError("shape", a.shape().str() + " vs " + b.shape().str());
}

}  // namespace detail

inline double psnr_from_mse(double mse, double peak) {
  if (mse == 0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

// PSNR of two luminance planes that are already cropped.
inline double psnr_luma(const Tensor& ya, const Tensor& yb, double peak = 255.0) {
  detail::require_pair(ya, yb);
  if (ya.numel() == 0) throw DimensionError("height", "empty region");
  auto a = ya.data();
  auto b = yb.data();
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return psnr_from_mse(acc / static_cast<double>(a.size()), peak);
}

// Frame PSNR (RGB in [0,1]) under the protocol's crop; +inf for identical frames.
inline double psnr(const Tensor& a, const Tensor& b, const EvalProtocol& p = {}) {
  p.validate();
  detail::require_pair(a, b);
  return psnr_luma(detail::prepare(a, p), detail::prepare(b, p), p.peak);
}

struct SsimWindow {
  int size = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
};

// Mean SSIM over all valid window positions of two single-channel planes
// (already on the peak scale). Gaussian window, separable.
inline double ssim_luma(const Tensor& ya, const Tensor& yb, double peak = 255.0, const SsimWindow& win = {}) {
  detail::require_pair(ya, yb);
  const Shape& s = ya.shape();
  if (s.c != 1) throw DimensionError("channels", "ssim_luma expects one channel");
  if (s.h < win.size || s.w < win.size) {
    throw DimensionError(s.h < win.size ? "height" : "width", "region " + s.str() + " smaller than SSIM window");
  }
  const int r = win.size / 2;
  std::vector<double> g(static_cast<std::size_t>(win.size));
  double norm = 0;
  for (int i = 0; i < win.size; ++i) {
    g[i] = std::exp(-0.5 * (i - r) * (i - r) / (win.sigma * win.sigma));
    norm += g[i];
  }
  for (double& v : g) v /= norm;
  const double c1 = (win.k1 * peak) * (win.k1 * peak);
  const double c2 = (win.k2 * peak) * (win.k2 * peak);

  const std::int64_t oh = s.h - win.size + 1;
  const std::int64_t ow = s.w - win.size + 1;
  double total = 0;
  // Five filtered maps: mu_a, mu_b, E[a^2], E[b^2], E[ab].
  std::vector<double> rows(static_cast<std::size_t>(5 * s.h * ow));
  std::vector<double> maps(static_cast<std::size_t>(5 * oh * ow));
  for (std::int64_t n = 0; n < s.n; ++n) {
    const Scalar* a = ya.data().data() + n * s.plane();
    const Scalar* b = yb.data().data() + n * s.plane();
    for (std::int64_t y = 0; y < s.h; ++y) {
      for (std::int64_t x = 0; x < ow; ++x) {
        double acc[5] = {0, 0, 0, 0, 0};
        for (int k = 0; k < win.size; ++k) {
          const double va = a[y * s.w + x + k];
          const double vb = b[y * s.w + x + k];
          acc[0] += g[k] * va;
          acc[1] += g[k] * vb;
          acc[2] += g[k] * va * va;
          acc[3] += g[k] * vb * vb;
          acc[4] += g[k] * va * vb;
        }
        for (int m = 0; m < 5; ++m) rows[(m * s.h + y) * ow + x] = acc[m];
      }
    }
    for (std::int64_t y = 0; y < oh; ++y) {
      for (std::int64_t x = 0; x < ow; ++x) {
        for (int m = 0; m < 5; ++m) {
          double acc = 0;
          for (int k = 0; k < win.size; ++k) acc += g[k] * rows[(m * s.h + y + k) * ow + x];
          maps[(m * oh + y) * ow + x] = acc;
        }
      }
    }
    const std::int64_t count = oh * ow;
    for (std::int64_t i = 0; i < count; ++i) {
      const double mu_a = maps[i];
      const double mu_b = maps[count + i];
      const double var_a = maps[2 * count + i] - mu_a * mu_a;
      const double var_b = maps[3 * count + i] - mu_b * mu_b;
      const double cov = maps[4 * count + i] - mu_a * mu_b;
      total += ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) /
               ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
    }
  }
  return total / static_cast<double>(s.n * oh * ow);
}

inline double ssim(const Tensor& a, const Tensor& b, const EvalProtocol& p = {}) {
  p.validate();
  detail::require_pair(a, b);
  return ssim_luma(detail::prepare(a, p), detail::prepare(b, p), p.peak);
}

struct SequenceScore {
  double psnr = 0;
  double ssim = 0;
  int frames = 0;
};

// Mean per-frame scores over frames [skip, T - skip).
inline SequenceScore score_sequence(const std::vector<Tensor>& sr, const std::vector<Tensor>& hr,
                                    const EvalProtocol& p = {}) {
  p.validate();
  if (sr.size() != hr.size()) throw DimensionError("frames", "SR/HR frame counts differ");
  const int T = static_cast<int>(sr.size());
  if (T - 2 * p.skip_frames < 1) {
    throw DimensionError("frames", std::to_string(T) + " frames leave nothing after skipping " +
                                       std::to_string(p.skip_frames) + " at each end");
  }
  SequenceScore s;
  for (int t = p.skip_frames; t < T - p.skip_frames; ++t) {
    const Tensor ya = detail::prepare(sr[t], p);
    const Tensor yb = detail::prepare(hr[t], p);
    s.psnr += psnr_luma(ya, yb, p.peak);
    s.ssim += ssim_luma(ya, yb, p.peak);
    ++s.frames;
  }
  s.psnr /= s.frames;
  s.ssim /= s.frames;
  return s;
}

// ---------------------------------------------------------------------------
// Complexity accounting. One multiply-accumulate counts as one FLOP.

inline std::int64_t count_flops(const GeneratorSpec& g, std::int64_t lr_h, std::int64_t lr_w) {
  std::int64_t total = 0;
  for (const auto& l : layer_specs(g)) {
    const std::int64_t pixels = lr_h * l.resolution * lr_w * l.resolution;
    total += l.weights() * pixels;
  }
  return total;
}

// MACs to produce one output frame of out_h x out_w (one precursor plus one
// successor pass for the omniscient frameworks).
inline std::int64_t count_flops(const ModelConfig& cfg, std::int64_t out_h, std::int64_t out_w) {
  cfg.validate();
  if (out_h % cfg.scale != 0) throw DimensionError("height", "output height not divisible by scale");
  if (out_w % cfg.scale != 0) throw DimensionError("width", "output width not divisible by scale");
  const std::int64_t h = out_h / cfg.scale;
  const std::int64_t w = out_w / cfg.scale;
  std::int64_t total = count_flops(successor_spec(cfg), h, w);
  if (cfg.has_precursor()) total += count_flops(precursor_spec(cfg), h, w);
  return total;
}

// Rough estimate: total parameters times LR pixels.
inline std::int64_t estimate_flops(const ModelConfig& cfg, std::int64_t out_h, std::int64_t out_w) {
  return count_parameters(cfg).total() * (out_h / cfg.scale) * (out_w / cfg.scale);
}

inline double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of nothing");
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 == 1 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

struct BenchmarkResult {
  double ms_per_frame = 0;
  double fps = 0;
  std::vector<double> samples;  // ms per frame, one per rep
};

// Median wall time per output frame of a full inference pass over `frames`
// random LR frames of lr_h x lr_w. Single-threaded unless `threads` says otherwise.
inline BenchmarkResult benchmark_time(const Model& model, int lr_h, int lr_w, int frames = 5, int reps = 3,
                                      int warmup = 1, int threads = 1) {
  if (warmup < 1) throw std::invalid_argument("benchmark needs at least one warmup rep");
  if (reps < 1) throw std::invalid_argument("benchmark needs at least one rep");
  ThreadCountScope scope(threads);
  NoGradScope no_grad;
  VideoSequence seq;
  seq.scale = model.config.scale;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < frames; ++t) {
    Tensor f({1, model.config.image_channels, lr_h, lr_w});
    for (auto& v : f.mutable_data()) v = static_cast<Scalar>(u(rng));
    seq.lr.push_back(f);
  }
  for (int i = 0; i < warmup; ++i) run_model(model, seq);
  BenchmarkResult r;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const RunResult out = run_model(model, seq);
    const auto t1 = std::chrono::steady_clock::now();
    const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    r.samples.push_back(ms / static_cast<double>(out.sr.size()));
  }
  r.ms_per_frame = median(r.samples);
  r.fps = 1000.0 / r.ms_per_frame;
  return r;
}

// ---------------------------------------------------------------------------
// Reports

inline std::string format_metric(double v, int precision = 4) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

struct EvalRow {
  std::string sequence;
  double psnr = 0;
  double ssim = 0;
};

struct EvalReport {
  std::string model;
  std::vector<EvalRow> rows;
  std::int64_t parameters = 0;
  std::int64_t flops = 0;
  int flops_h = 720;
  int flops_w = 1280;
  double ms_per_frame = 0;  // 0 when not measured
  double fps = 0;

  double mean_psnr() const {
    double s = 0;
    for (const auto& r : rows) s += r.psnr;
    return rows.empty() ? 0 : s / static_cast<double>(rows.size());
  }
  double mean_ssim() const {
    double s = 0;
    for (const auto& r : rows) s += r.ssim;
    return rows.empty() ? 0 : s / static_cast<double>(rows.size());
  }

  std::string to_csv() const {
    std::ostringstream os;
    os << "sequence,psnr,ssim\n";
    for (const auto& r : rows) os << r.sequence << "," << format_metric(r.psnr, 6) << "," << format_metric(r.ssim, 6) << "\n";
    os << "mean," << format_metric(mean_psnr(), 6) << "," << format_metric(mean_ssim(), 6) << "\n";
    os << "\nmodel,parameters_m,flops_t_" << flops_w << "x" << flops_h << ",time_ms,fps\n";
    os << model << "," << format_metric(parameters / 1e6, 3) << "," << format_metric(flops / 1e12, 3) << ","
       << format_metric(ms_per_frame, 2) << "," << format_metric(fps, 1) << "\n";
    return os.str();
  }

  // Column order: model, parameters, FLOPs, time / FPS, PSNR / SSIM.
  std::string to_table() const {
    std::ostringstream os;
    char line[256];
    std::snprintf(line, sizeof line, "%-22s %14s %16s %16s %18s\n", "Model", "Parameter (M)", "FLOPs (T)",
                  "Time (ms) / FPS", "PSNR (dB) / SSIM");
    os << line;
    const std::string time = format_metric(ms_per_frame, 2) + " / " + format_metric(fps, 1);
    const std::string quality = format_metric(mean_psnr(), 2) + " / " + format_metric(mean_ssim(), 4);
    std::snprintf(line, sizeof line, "%-22s %14s %16s %16s %18s\n", model.c_str(),
                  format_metric(parameters / 1e6, 3).c_str(), format_metric(flops / 1e12, 3).c_str(), time.c_str(),
                  quality.c_str());
    os << line;
    os << "FLOPs counted as multiply-accumulates at " << flops_w << "x" << flops_h << " output.\n";
    for (const auto& r : rows) {
      std::snprintf(line, sizeof line, "  %-20s %10s dB  %8s\n", r.sequence.c_str(), format_metric(r.psnr, 2).c_str(),
                    format_metric(r.ssim, 4).c_str());
      os << line;
    }
    return os.str();
  }
};

}  // namespace ovsr
