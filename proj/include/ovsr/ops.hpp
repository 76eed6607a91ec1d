#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ovsr/autodiff.hpp"
#include "ovsr/parallel.hpp"
#include "ovsr/tensor.hpp"

namespace ovsr {

enum class Padding { kSame, kValid };

namespace detail {

using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

struct ConvGeometry {
  std::int64_t batch, in_ch, out_ch, kernel, pad;
  std::int64_t in_h, in_w, out_h, out_w;

  std::int64_t patch() const { return in_ch * kernel * kernel; }
  std::int64_t out_plane() const { return out_h * out_w; }
  bool pointwise() const { return kernel == 1 && pad == 0; }
};

// Unfolds one sample into a (C*k*k) x (out_h*out_w) row-major matrix.
inline void im2col(const Scalar* src, const ConvGeometry& g, Scalar* col) {
  const std::int64_t k = g.kernel;
  for (std::int64_t c = 0; c < g.in_ch; ++c) {
    const Scalar* plane = src + c * g.in_h * g.in_w;
    for (std::int64_t ky = 0; ky < k; ++ky) {
      for (std::int64_t kx = 0; kx < k; ++kx) {
        Scalar* row = col + ((c * k + ky) * k + kx) * g.out_plane();
        for (std::int64_t y = 0; y < g.out_h; ++y) {
          const std::int64_t iy = y + ky - g.pad;
          Scalar* dst = row + y * g.out_w;
          if (iy < 0 || iy >= g.in_h) {
            std::fill(dst, dst + g.out_w, Scalar{0});
            continue;
          }
          const Scalar* line = plane + iy * g.in_w;
          for (std::int64_t x = 0; x < g.out_w; ++x) {
            const std::int64_t ix = x + kx - g.pad;
            dst[x] = (ix < 0 || ix >= g.in_w) ? Scalar{0} : line[ix];
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatters column gradients back onto the input plane.
inline void col2im_add(const Scalar* col, const ConvGeometry& g, Scalar* dst) {
  const std::int64_t k = g.kernel;
  for (std::int64_t c = 0; c < g.in_ch; ++c) {
    Scalar* plane = dst + c * g.in_h * g.in_w;
    for (std::int64_t ky = 0; ky < k; ++ky) {
      for (std::int64_t kx = 0; kx < k; ++kx) {
        const Scalar* row = col + ((c * k + ky) * k + kx) * g.out_plane();
        for (std::int64_t y = 0; y < g.out_h; ++y) {
          const std::int64_t iy = y + ky - g.pad;
          if (iy < 0 || iy >= g.in_h) continue;
          const Scalar* src = row + y * g.out_w;
          Scalar* line = plane + iy * g.in_w;
          for (std::int64_t x = 0; x < g.out_w; ++x) {
            const std::int64_t ix = x + kx - g.pad;
            if (ix >= 0 && ix < g.in_w) line[ix] += src[x];
          }
        }
      }
    }
  }
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  const auto& x = a.shape();
  const auto& y = b.shape();
  auto check = [&](std::int64_t p, std::int64_t q, const char* axis) {
    if (p != q) {
      throw DimensionError(axis, std::string(op) + ": " + x.str() + " vs " + y.str());
    }
  };
  check(x.n, y.n, "batch");
  check(x.c, y.c, "channels");
  check(x.h, y.h, "height");
  check(x.w, y.w, "width");
}

}  // namespace detail

// Stride-1 cross-correlation. weights: (F_out, F_in, k, k); bias: (1, F_out, 1, 1)
// or undefined for no bias.
inline Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor& bias,
                     Padding padding = Padding::kSame) {
  const Shape& is = input.shape();
  const Shape& ws = weights.shape();
  if (ws.h != ws.w) throw DimensionError("kernel", "kernel must be square, got " + ws.str());
  if (ws.h % 2 == 0) throw DimensionError("kernel", "kernel size must be odd, got " + ws.str());
  if (is.c != ws.c) {
    throw DimensionError("channels", "input has " + std::to_string(is.c) +
                                         " channels, weights expect " + std::to_string(ws.c));
  }
  if (bias.defined() && bias.numel() != ws.n) {
    throw DimensionError("bias", "bias length " + std::to_string(bias.numel()) +
                                     " != output channels " + std::to_string(ws.n));
  }
  detail::ConvGeometry g{is.n, is.c, ws.n, ws.h, padding == Padding::kSame ? ws.h / 2 : 0,
                         is.h, is.w, 0, 0};
  g.out_h = is.h + 2 * g.pad - g.kernel + 1;
  g.out_w = is.w + 2 * g.pad - g.kernel + 1;
  if (g.out_h <= 0) throw DimensionError("height", "input too small for valid convolution");
  if (g.out_w <= 0) throw DimensionError("width", "input too small for valid convolution");

  Tensor out({g.batch, g.out_ch, g.out_h, g.out_w});
  const Scalar* x = input.data().data();
  const Scalar* wt = weights.data().data();
  const Scalar* b = bias.defined() ? bias.data().data() : nullptr;
  Scalar* y = out.mutable_data().data();
  const std::int64_t in_stride = g.in_ch * g.in_h * g.in_w;
  const std::int64_t out_stride = g.out_ch * g.out_plane();

  parallel_for(static_cast<std::size_t>(g.batch), [&](std::size_t n) {
    detail::ConstMatrixMap w_mat(wt, g.out_ch, g.patch());
    detail::MatrixMap y_mat(y + n * out_stride, g.out_ch, g.out_plane());
    if (g.pointwise()) {
      y_mat.noalias() = w_mat * detail::ConstMatrixMap(x + n * in_stride, g.in_ch, g.out_plane());
    } else {
      detail::RowMatrix col(g.patch(), g.out_plane());
      detail::im2col(x + n * in_stride, g, col.data());
      y_mat.noalias() = w_mat * col;
    }
    if (b != nullptr) {
      for (std::int64_t o = 0; o < g.out_ch; ++o) y_mat.row(o).array() += b[o];
    }
  });
  debug_check_finite(out, "conv2d");

  if (detail::recording({&input, &weights, &bias})) {
    const Tensor saved_in = input;
    const Tensor saved_w = weights;
    const bool has_bias = bias.defined();
    std::vector<Tensor> inputs{input, weights};
    if (has_bias) inputs.push_back(bias);
    detail::record(inputs, out, [g, saved_in, saved_w, has_bias](std::span<const Scalar> gy,
                                                                  std::span<const std::span<Scalar>> gi) {
      const Scalar* x = saved_in.data().data();
      const Scalar* wt = saved_w.data().data();
      const std::int64_t in_stride = g.in_ch * g.in_h * g.in_w;
      const std::int64_t out_stride = g.out_ch * g.out_plane();
      const bool need_dx = !gi[0].empty();
      const bool need_dw = !gi[1].empty();
      const bool need_db = has_bias && !gi[2].empty();
      const std::int64_t wsize = g.out_ch * g.patch();
      // Per-sample weight-gradient partials, summed in sample order below so
      // the result is independent of the worker count.
      std::vector<Scalar> dw_parts(need_dw ? static_cast<std::size_t>(g.batch * wsize) : 0);

      parallel_for(static_cast<std::size_t>(g.batch), [&](std::size_t n) {
        detail::ConstMatrixMap w_mat(wt, g.out_ch, g.patch());
        detail::ConstMatrixMap gy_mat(gy.data() + n * out_stride, g.out_ch, g.out_plane());
        if (g.pointwise()) {
          detail::ConstMatrixMap x_mat(x + n * in_stride, g.in_ch, g.out_plane());
          if (need_dw) {
            detail::MatrixMap(dw_parts.data() + n * wsize, g.out_ch, g.patch()).noalias() =
                gy_mat * x_mat.transpose();
          }
          if (need_dx) {
            detail::MatrixMap(gi[0].data() + n * in_stride, g.in_ch, g.out_plane()).noalias() +=
                w_mat.transpose() * gy_mat;
          }
          return;
        }
        detail::RowMatrix col(g.patch(), g.out_plane());
        if (need_dw) {
          detail::im2col(x + n * in_stride, g, col.data());
          detail::MatrixMap(dw_parts.data() + n * wsize, g.out_ch, g.patch()).noalias() =
              gy_mat * col.transpose();
        }
        if (need_dx) {
          col.noalias() = w_mat.transpose() * gy_mat;
          detail::col2im_add(col.data(), g, gi[0].data() + n * in_stride);
        }
      });

      if (need_dw) {
        for (std::int64_t n = 0; n < g.batch; ++n) {
          const Scalar* part = dw_parts.data() + n * wsize;
          for (std::int64_t i = 0; i < wsize; ++i) gi[1][i] += part[i];
        }
      }
      if (need_db) {
        for (std::int64_t n = 0; n < g.batch; ++n) {
          for (std::int64_t o = 0; o < g.out_ch; ++o) {
            const Scalar* row = gy.data() + n * out_stride + o * g.out_plane();
            Scalar s = 0;
            for (std::int64_t p = 0; p < g.out_plane(); ++p) s += row[p];
            gi[2][o] += s;
          }
        }
      }
    });
  }
  return out;
}

inline Tensor leaky_relu(const Tensor& input, Scalar slope) {
  Tensor out(input.shape());
  auto x = input.data();
  auto y = out.mutable_data();
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] >= 0 ? x[i] : slope * x[i];
  if (detail::recording({&input})) {
    const Tensor saved = input;
    detail::record(std::vector<Tensor>{input}, out,
                   [saved, slope](std::span<const Scalar> gy, std::span<const std::span<Scalar>> gi) {
                     auto x = saved.data();
                     for (std::size_t i = 0; i < x.size(); ++i) gi[0][i] += x[i] >= 0 ? gy[i] : slope * gy[i];
                   });
  }
  return out;
}

// (B, C*r*r, H, W) -> (B, C, H*r, W*r); channel c*r*r + i*r + j lands at
// spatial offset (i, j) of each r x r tile.
inline Tensor pixel_shuffle(const Tensor& input, std::int64_t r) {
  const Shape& s = input.shape();
  if (r < 1) throw DimensionError("factor", "shuffle factor must be >= 1");
  if (s.c % (r * r) != 0) {
    throw DimensionError("channels", std::to_string(s.c) + " channels not divisible by r^2 = " +
                                         std::to_string(r * r));
  }
  const Shape os{s.n, s.c / (r * r), s.h * r, s.w * r};
  Tensor out(os);
  auto x = input.data();
  auto y = out.mutable_data();
  std::vector<std::int64_t> src_of(static_cast<std::size_t>(os.numel()));
  for (std::int64_t n = 0; n < s.n; ++n)
    for (std::int64_t c = 0; c < os.c; ++c)
      for (std::int64_t i = 0; i < r; ++i)
        for (std::int64_t j = 0; j < r; ++j)
          for (std::int64_t h = 0; h < s.h; ++h)
            for (std::int64_t w = 0; w < s.w; ++w) {
              const std::int64_t src = ((n * s.c + c * r * r + i * r + j) * s.h + h) * s.w + w;
              const std::int64_t dst = ((n * os.c + c) * os.h + h * r + i) * os.w + w * r + j;
              y[dst] = x[src];
              src_of[dst] = src;
            }
  if (detail::recording({&input})) {
    detail::record(std::vector<Tensor>{input}, out,
                   [src_of = std::move(src_of)](std::span<const Scalar> gy,
                                                std::span<const std::span<Scalar>> gi) {
                     for (std::size_t d = 0; d < src_of.size(); ++d) gi[0][src_of[d]] += gy[d];
                   });
  }
  return out;
}

// Inverse of pixel_shuffle: (B, C, H*r, W*r) -> (B, C*r*r, H, W).
inline Tensor pixel_unshuffle(const Tensor& input, std::int64_t r) {
  const Shape& s = input.shape();
  if (r < 1) throw DimensionError("factor", "shuffle factor must be >= 1");
  if (s.h % r != 0) throw DimensionError("height", "height not divisible by factor");
  if (s.w % r != 0) throw DimensionError("width", "width not divisible by factor");
  const Shape os{s.n, s.c * r * r, s.h / r, s.w / r};
  Tensor out(os);
  auto x = input.data();
  auto y = out.mutable_data();
  std::vector<std::int64_t> src_of(static_cast<std::size_t>(os.numel()));
  for (std::int64_t n = 0; n < s.n; ++n)
    for (std::int64_t c = 0; c < s.c; ++c)
      for (std::int64_t i = 0; i < r; ++i)
        for (std::int64_t j = 0; j < r; ++j)
          for (std::int64_t h = 0; h < os.h; ++h)
            for (std::int64_t w = 0; w < os.w; ++w) {
              const std::int64_t dst = ((n * os.c + c * r * r + i * r + j) * os.h + h) * os.w + w;
              const std::int64_t src = ((n * s.c + c) * s.h + h * r + i) * s.w + w * r + j;
              y[dst] = x[src];
              src_of[dst] = src;
            }
  if (detail::recording({&input})) {
    detail::record(std::vector<Tensor>{input}, out,
                   [src_of = std::move(src_of)](std::span<const Scalar> gy,
                                                std::span<const std::span<Scalar>> gi) {
                     for (std::size_t d = 0; d < src_of.size(); ++d) gi[0][src_of[d]] += gy[d];
                   });
  }
  return out;
}

inline Tensor concat_channels(std::span<const Tensor> inputs) {
  if (inputs.empty()) throw DimensionError("inputs", "concat of an empty list");
  const Shape& first = inputs.front().shape();
  std::int64_t channels = 0;
  for (const auto& t : inputs) {
    const Shape& s = t.shape();
    if (s.n != first.n) throw DimensionError("batch", "concat: " + s.str() + " vs " + first.str());
    if (s.h != first.h) throw DimensionError("height", "concat: " + s.str() + " vs " + first.str());
    if (s.w != first.w) throw DimensionError("width", "concat: " + s.str() + " vs " + first.str());
    channels += s.c;
  }
  Tensor out({first.n, channels, first.h, first.w});
  auto y = out.mutable_data();
  const std::int64_t plane = first.h * first.w;
  std::int64_t c0 = 0;
  for (const auto& t : inputs) {
    const auto x = t.data();
    const std::int64_t block = t.shape().c * plane;
    for (std::int64_t n = 0; n < first.n; ++n) {
      std::copy_n(x.data() + n * block, block, y.data() + (n * channels + c0) * plane);
    }
    c0 += t.shape().c;
  }
  auto* tape = GradientTape::active();
  bool any = false;
  for (const auto& t : inputs) any = any || (tape != nullptr && tape->tracks(t));
  if (any) {
    std::vector<std::int64_t> widths;
    for (const auto& t : inputs) widths.push_back(t.shape().c);
    const std::int64_t batch = first.n;
    detail::record(inputs, out,
                   [widths, batch, channels, plane](std::span<const Scalar> gy,
                                                    std::span<const std::span<Scalar>> gi) {
                     std::int64_t c0 = 0;
                     for (std::size_t k = 0; k < widths.size(); ++k) {
                       const std::int64_t block = widths[k] * plane;
                       if (!gi[k].empty()) {
                         for (std::int64_t n = 0; n < batch; ++n) {
                           const Scalar* src = gy.data() + (n * channels + c0) * plane;
                           Scalar* dst = gi[k].data() + n * block;
                           for (std::int64_t i = 0; i < block; ++i) dst[i] += src[i];
                         }
                       }
                       c0 += widths[k];
                     }
                   });
  }
  return out;
}

inline Tensor concat_channels(std::initializer_list<Tensor> inputs) {
  return concat_channels(std::span<const Tensor>(inputs.begin(), inputs.size()));
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "add");
  Tensor out(a.shape());
  auto x = a.data();
  auto y = b.data();
  auto z = out.mutable_data();
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] + y[i];
  if (detail::recording({&a, &b})) {
    detail::record(std::vector<Tensor>{a, b}, out,
                   [](std::span<const Scalar> gy, std::span<const std::span<Scalar>> gi) {
                     for (const auto& g : gi) {
                       if (g.empty()) continue;
                       for (std::size_t i = 0; i < g.size(); ++i) g[i] += gy[i];
                     }
                   });
  }
  return out;
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "sub");
  Tensor out(a.shape());
  auto x = a.data();
  auto y = b.data();
  auto z = out.mutable_data();
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] - y[i];
  if (detail::recording({&a, &b})) {
    detail::record(std::vector<Tensor>{a, b}, out,
                   [](std::span<const Scalar> gy, std::span<const std::span<Scalar>> gi) {
                     if (!gi[0].empty())
                       for (std::size_t i = 0; i < gy.size(); ++i) gi[0][i] += gy[i];
                     if (!gi[1].empty())
                       for (std::size_t i = 0; i < gy.size(); ++i) gi[1][i] -= gy[i];
                   });
  }
  return out;
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "mul");
  Tensor out(a.shape());
  auto x = a.data();
  auto y = b.data();
  auto z = out.mutable_data();
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] * y[i];
  if (detail::recording({&a, &b})) {
    const Tensor sa = a;
    const Tensor sb = b;
    detail::record(std::vector<Tensor>{a, b}, out,
                   [sa, sb](std::span<const Scalar> gy, std::span<const std::span<Scalar>> gi) {
                     auto x = sa.data();
                     auto y = sb.data();
                     if (!gi[0].empty())
                       for (std::size_t i = 0; i < gy.size(); ++i) gi[0][i] += gy[i] * y[i];
                     if (!gi[1].empty())
                       for (std::size_t i = 0; i < gy.size(); ++i) gi[1][i] += gy[i] * x[i];
                   });
  }
  return out;
}

inline Tensor scale(const Tensor& a, Scalar factor) {
  Tensor out(a.shape());
  auto x = a.data();
  auto z = out.mutable_data();
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = factor * x[i];
  if (detail::recording({&a})) {
    detail::record(std::vector<Tensor>{a}, out,
                   [factor](std::span<const Scalar> gy, std::span<const std::span<Scalar>> gi) {
                     for (std::size_t i = 0; i < gy.size(); ++i) gi[0][i] += factor * gy[i];
                   });
  }
  return out;
}

// Sum of all elements as a (1,1,1,1) tensor; serial left-to-right reduction.
inline Tensor sum(const Tensor& a) {
  Scalar s = 0;
  for (Scalar v : a.data()) s += v;
  Tensor out = Tensor::scalar(s);
  if (detail::recording({&a})) {
    detail::record(std::vector<Tensor>{a}, out,
                   [](std::span<const Scalar> gy, std::span<const std::span<Scalar>> gi) {
                     for (auto& g : gi[0]) g += gy[0];
                   });
  }
  return out;
}

inline Tensor mean(const Tensor& a) { return scale(sum(a), Scalar{1} / static_cast<Scalar>(a.numel())); }

// mean(sqrt((a - b)^2 + eps^2)) over every element.
inline Tensor charbonnier(const Tensor& a, const Tensor& b, Scalar eps) {
  detail::require_same_shape(a, b, "charbonnier");
  auto x = a.data();
  auto y = b.data();
  const Scalar inv = Scalar{1} / static_cast<Scalar>(x.size());
  Scalar s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Scalar d = x[i] - y[i];
    s += std::sqrt(d * d + eps * eps);
  }
  Tensor out = Tensor::scalar(s * inv);
  if (detail::recording({&a, &b})) {
    const Tensor sa = a;
    const Tensor sb = b;
    detail::record(std::vector<Tensor>{a, b}, out,
                   [sa, sb, eps, inv](std::span<const Scalar> gy, std::span<const std::span<Scalar>> gi) {
                     auto x = sa.data();
                     auto y = sb.data();
                     for (std::size_t i = 0; i < x.size(); ++i) {
                       const Scalar d = x[i] - y[i];
                       const Scalar g = gy[0] * inv * d / std::sqrt(d * d + eps * eps);
                       if (!gi[0].empty()) gi[0][i] += g;
                       if (!gi[1].empty()) gi[1][i] -= g;
                     }
                   });
  }
  return out;
}

}  // namespace ovsr
