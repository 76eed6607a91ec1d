#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ovsr/tensor.hpp"

namespace ovsr {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OptimizerState {
  std::vector<std::vector<Scalar>> first_moment;
  std::vector<std::vector<Scalar>> second_moment;
  std::int64_t step = 0;
};

// One bias-corrected Adam update. Parameters are replaced by fresh tensors;
// moment buffers are created on the first call.
inline void adam_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads, OptimizerState& state,
                      double lr, const AdamConfig& cfg = {}) {
  if (params.size() != grads.size()) throw DimensionError("params", "parameter/gradient counts differ");
  if (!(lr >= 0)) throw std::invalid_argument("learning rate must be >= 0");
  if (state.first_moment.empty()) {
    for (const Tensor* p : params) {
      state.first_moment.emplace_back(static_cast<std::size_t>(p->numel()), Scalar{0});
      state.second_moment.emplace_back(static_cast<std::size_t>(p->numel()), Scalar{0});
    }
  }
  if (state.first_moment.size() != params.size()) throw DimensionError("state", "optimizer state size mismatch");
  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const auto g = grads[i].data();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    if (!(grads[i].shape() == p.shape()) || m.size() != g.size()) {
      throw DimensionError("params", "shape mismatch at parameter " + std::to_string(i));
    }
    Tensor next(p.shape());
    const auto cur = p.data();
    auto out = next.mutable_data();
    for (std::size_t k = 0; k < g.size(); ++k) {
      m[k] = static_cast<Scalar>(cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k]);
      v[k] = static_cast<Scalar>(cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k]);
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      out[k] = static_cast<Scalar>(cur[k] - lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon));
    }
    p = next;
  }
}

}  // namespace ovsr
