#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ovsr/autodiff.hpp"
#include "ovsr/tensor.hpp"

namespace ovsr {

// A 1-D linear map from `in_size` samples to `taps.size()` samples; output i
// is sum_k taps[i][k].weight * in[taps[i][k].index].
struct Resampler1D {
  struct Tap {
    std::int64_t index;
    Scalar weight;
  };
  std::int64_t in_size = 0;
  std::vector<std::vector<Tap>> taps;

  std::int64_t out_size() const { return static_cast<std::int64_t>(taps.size()); }
};

// Whole-sample symmetric reflection (d c b a | a b c d | d c b a), valid for any offset.
inline std::int64_t reflect_index(std::int64_t i, std::int64_t n) {
  if (n == 1) return 0;
  const std::int64_t period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

inline int default_blur_radius(double sigma) { return static_cast<int>(std::ceil(3.0 * sigma)); }

// Truncated Gaussian of length 2*radius+1 normalized to unit sum. radius < 0
// selects ceil(3 sigma).
inline std::vector<Scalar> gaussian_kernel_1d(double sigma, int radius = -1) {
  if (!(sigma > 0)) throw std::invalid_argument("gaussian sigma must be positive");
  if (radius < 0) radius = default_blur_radius(sigma);
  std::vector<double> k(2 * radius + 1);
  double total = 0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
    total += k[i + radius];
  }
  std::vector<Scalar> out(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) out[i] = static_cast<Scalar>(k[i] / total);
  return out;
}

inline Resampler1D blur_resampler(std::int64_t n, const std::vector<Scalar>& kernel) {
  const auto radius = static_cast<std::int64_t>(kernel.size() / 2);
  Resampler1D r;
  r.in_size = n;
  r.taps.resize(n);
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = -radius; j <= radius; ++j) {
      r.taps[i].push_back({reflect_index(i + j, n), kernel[j + radius]});
    }
  }
  return r;
}

inline Resampler1D decimate_resampler(std::int64_t n, std::int64_t factor) {
  Resampler1D r;
  r.in_size = n;
  r.taps.resize(n / factor);
  for (std::int64_t i = 0; i < n / factor; ++i) r.taps[i].push_back({i * factor, Scalar{1}});
  return r;
}

// Keys cubic convolution kernel.
inline double cubic_weight(double x, double a = -0.5) {
  x = std::abs(x);
  if (x <= 1) return ((a + 2) * x - (a + 3)) * x * x + 1;
  if (x < 2) return ((a * x - 5 * a) * x + 8 * a) * x - 4 * a;
  return 0;
}

// Pixel-centre aligned cubic upsampling with edge replication.
inline Resampler1D bicubic_resampler(std::int64_t n, std::int64_t factor) {
  Resampler1D r;
  r.in_size = n;
  r.taps.resize(n * factor);
  for (std::int64_t i = 0; i < n * factor; ++i) {
    const double src = (static_cast<double>(i) + 0.5) / static_cast<double>(factor) - 0.5;
    const auto base = static_cast<std::int64_t>(std::floor(src));
    for (std::int64_t m = -1; m <= 2; ++m) {
      const std::int64_t idx = std::clamp<std::int64_t>(base + m, 0, n - 1);
      const double w = cubic_weight(src - static_cast<double>(base + m));
      if (w != 0) r.taps[i].push_back({idx, static_cast<Scalar>(w)});
    }
  }
  return r;
}

namespace detail {

// Applies `rows` along height and `cols` along width to every (n, c) plane.
inline void separable_forward(const Scalar* src, Scalar* dst, std::int64_t planes, std::int64_t h,
                              std::int64_t w, const Resampler1D& rows, const Resampler1D& cols) {
  const std::int64_t oh = rows.out_size();
  const std::int64_t ow = cols.out_size();
  std::vector<Scalar> tmp(static_cast<std::size_t>(oh * w));
  for (std::int64_t p = 0; p < planes; ++p) {
    const Scalar* in = src + p * h * w;
    for (std::int64_t y = 0; y < oh; ++y) {
      Scalar* line = tmp.data() + y * w;
      std::fill(line, line + w, Scalar{0});
      for (const auto& tap : rows.taps[y]) {
        const Scalar* s = in + tap.index * w;
        for (std::int64_t x = 0; x < w; ++x) line[x] += tap.weight * s[x];
      }
    }
    Scalar* out = dst + p * oh * ow;
    for (std::int64_t y = 0; y < oh; ++y) {
      const Scalar* line = tmp.data() + y * w;
      for (std::int64_t x = 0; x < ow; ++x) {
        Scalar acc = 0;
        for (const auto& tap : cols.taps[x]) acc += tap.weight * line[tap.index];
        out[y * ow + x] = acc;
      }
    }
  }
}

// Adjoint of separable_forward, accumulating into `grad_src`.
inline void separable_backward(const Scalar* grad_dst, Scalar* grad_src, std::int64_t planes,
                               std::int64_t h, std::int64_t w, const Resampler1D& rows,
                               const Resampler1D& cols) {
  const std::int64_t oh = rows.out_size();
  const std::int64_t ow = cols.out_size();
  std::vector<Scalar> tmp(static_cast<std::size_t>(oh * w));
  for (std::int64_t p = 0; p < planes; ++p) {
    std::fill(tmp.begin(), tmp.end(), Scalar{0});
    const Scalar* g = grad_dst + p * oh * ow;
    for (std::int64_t y = 0; y < oh; ++y) {
      Scalar* line = tmp.data() + y * w;
      for (std::int64_t x = 0; x < ow; ++x) {
        for (const auto& tap : cols.taps[x]) line[tap.index] += tap.weight * g[y * ow + x];
      }
    }
    Scalar* gs = grad_src + p * h * w;
    for (std::int64_t y = 0; y < oh; ++y) {
      const Scalar* line = tmp.data() + y * w;
      for (const auto& tap : rows.taps[y]) {
        Scalar* d = gs + tap.index * w;
        for (std::int64_t x = 0; x < w; ++x) d[x] += tap.weight * line[x];
      }
    }
  }
}

inline Tensor apply_separable(const Tensor& input, Resampler1D rows, Resampler1D cols, const char* op) {
  const Shape& s = input.shape();
  const Shape os{s.n, s.c, rows.out_size(), cols.out_size()};
  Tensor out(os);
  separable_forward(input.data().data(), out.mutable_data().data(), s.n * s.c, s.h, s.w, rows, cols);
  debug_check_finite(out, op);
  if (recording({&input})) {
    record(std::vector<Tensor>{input}, out,
           [s, rows = std::move(rows), cols = std::move(cols)](std::span<const Scalar> gy,
                                                               std::span<const std::span<Scalar>> gi) {
             separable_backward(gy.data(), gi[0].data(), s.n * s.c, s.h, s.w, rows, cols);
           });
  }
  return out;
}

}  // namespace detail

// Separable Gaussian blur with symmetric reflection at the borders.
inline Tensor gaussian_blur(const Tensor& input, double sigma, int radius = -1) {
  const auto kernel = gaussian_kernel_1d(sigma, radius);
  const Shape& s = input.shape();
  return detail::apply_separable(input, blur_resampler(s.h, kernel), blur_resampler(s.w, kernel),
                                 "gaussian_blur");
}

// Keeps every factor-th pixel starting at (0, 0).
inline Tensor downsample(const Tensor& input, std::int64_t factor) {
  const Shape& s = input.shape();
  if (factor < 1) throw DimensionError("factor", "downsample factor must be >= 1");
  if (s.h % factor != 0) {
    throw DimensionError("height", std::to_string(s.h) + " not divisible by " + std::to_string(factor));
  }
  if (s.w % factor != 0) {
    throw DimensionError("width", std::to_string(s.w) + " not divisible by " + std::to_string(factor));
  }
  return detail::apply_separable(input, decimate_resampler(s.h, factor), decimate_resampler(s.w, factor),
                                 "downsample");
}

inline Tensor bicubic_upsample(const Tensor& input, std::int64_t factor) {
  if (factor < 1) throw DimensionError("factor", "upsample factor must be >= 1");
  const Shape& s = input.shape();
  if (s.h < 1 || s.w < 1) throw DimensionError("height", "empty image");
  return detail::apply_separable(input, bicubic_resampler(s.h, factor), bicubic_resampler(s.w, factor),
                                 "bicubic_upsample");
}

}  // namespace ovsr
