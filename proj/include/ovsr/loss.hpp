#pragma once

#include <stdexcept>
#include <vector>

#include "ovsr/ops.hpp"
#include "ovsr/tensor.hpp"

namespace ovsr {

struct LossConfig {
  double epsilon = 1e-3;
  // Weight of the precursor term.
  double alpha = 0.0;

  void validate() const {
    if (!(epsilon > 0)) throw std::invalid_argument("loss epsilon must be positive");
    if (!(alpha >= 0)) throw std::invalid_argument("loss alpha must be >= 0");
  }
};

// mean sqrt((HR - SR)^2 + eps^2) + alpha * mean sqrt((HR - SR_p)^2 + eps^2).
// With alpha == 0 the precursor term is not built at all, so no gradient flows
// through SR_p from the loss.
inline Tensor charbonnier_loss(const Tensor& sr, const Tensor& sr_p, const Tensor& hr, const LossConfig& cfg) {
  cfg.validate();
  Tensor loss = charbonnier(hr, sr, static_cast<Scalar>(cfg.epsilon));
  if (cfg.alpha != 0) {
    loss = add(loss, scale(charbonnier(hr, sr_p, static_cast<Scalar>(cfg.epsilon)), static_cast<Scalar>(cfg.alpha)));
  }
  return loss;
}

// Mean over frames of the per-frame loss (equal-sized frames, so this is the
// mean over batch, frames, channels and pixels). `sr_p` may be empty for
// single-generator frameworks.
inline Tensor sequence_loss(const std::vector<Tensor>& sr, const std::vector<Tensor>& sr_p,
                            const std::vector<Tensor>& hr, const LossConfig& cfg) {
  if (sr.empty() || sr.size() != hr.size()) throw DimensionError("frames", "SR/HR frame counts differ");
  if (!sr_p.empty() && sr_p.size() != sr.size()) throw DimensionError("frames", "SR_p frame count differs");
  LossConfig frame_cfg = cfg;
  if (sr_p.empty()) frame_cfg.alpha = 0;
  Tensor total;
  for (std::size_t t = 0; t < sr.size(); ++t) {
    Tensor l = charbonnier_loss(sr[t], sr_p.empty() ? sr[t] : sr_p[t], hr[t], frame_cfg);
    total = total.defined() ? add(total, l) : l;
  }
  return scale(total, Scalar{1} / static_cast<Scalar>(sr.size()));
}

}  // namespace ovsr
