#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ovsr/autodiff.hpp"
#include "ovsr/config.hpp"
#include "ovsr/data.hpp"
#include "ovsr/loss.hpp"
#include "ovsr/lr_schedule.hpp"
#include "ovsr/metrics.hpp"
#include "ovsr/model.hpp"
#include "ovsr/optimizer.hpp"
#include "ovsr/parallel.hpp"
#include "ovsr/scheduler.hpp"

namespace ovsr {

struct TrainConfig {
  std::int64_t iterations = 300'000;
  int batch = 16;
  int lr_patch = 64;
  int clip_length = 7;
  // Adds one context frame at each end of every training clip (no loss on them).
  bool context_frames = true;
  // LR size of each generated clip; patches are cropped from it.
  int synth_lr_size = 64;
  std::uint64_t seed = 0;
  LrSchedule schedule;
  // Stretch the schedule so its last drop lands on `iterations`.
  bool scale_schedule = true;
  AdamConfig adam;
  SynthConfig synth;
  DegradeConfig degrade;
  // Held-out set; 0 disables periodic evaluation (the final one still runs).
  std::int64_t eval_every = 0;
  int eval_clips = 4;
  int eval_length = 9;
  int eval_lr_size = 32;
  std::uint64_t eval_seed = 1'000'003;
  EvalProtocol protocol;
  int threads = 1;

  void validate() const {
    if (iterations < 1) throw ConfigError("iterations", "must be >= 1");
    if (batch < 1) throw ConfigError("batch", "must be >= 1");
    if (lr_patch < 1) throw ConfigError("lr_patch", "must be >= 1");
    if (lr_patch > synth_lr_size) throw ConfigError("lr_patch", "larger than synth_lr_size");
    if (clip_length < 1) throw ConfigError("clip_length", "must be >= 1");
    if (eval_every < 0) throw ConfigError("eval_every", "must be >= 0");
    if (eval_clips < 1) throw ConfigError("eval_clips", "must be >= 1");
    if (eval_length - 2 * protocol.skip_frames < 1) throw ConfigError("eval_length", "nothing left after frame skipping");
    if (eval_lr_size * degrade.factor - 2 * protocol.border_crop < 11) {
      throw ConfigError("eval_lr_size", "too small for the border crop and SSIM window");
    }
    if (threads < 1) throw ConfigError("threads", "must be >= 1");
    schedule.validate();
    protocol.validate();
  }

  LrSchedule effective_schedule() const {
    LrSchedule s = schedule;
    if (scale_schedule) s.time_scale = static_cast<double>(iterations) / s.drop2_at;
    return s;
  }
};

// Applies one training/loss key; returns false when the key is unknown here.
inline bool apply_train_key(TrainConfig& t, LossConfig& l, const std::string& key, const std::string& value) {
  if (key == "iterations") t.iterations = parse_int64_field(key, value);
  else if (key == "batch") t.batch = parse_int_field(key, value);
  else if (key == "lr_patch") t.lr_patch = parse_int_field(key, value);
  else if (key == "clip_length") t.clip_length = parse_int_field(key, value);
  else if (key == "context_frames") t.context_frames = parse_bool_field(key, value);
  else if (key == "synth_lr_size") t.synth_lr_size = parse_int_field(key, value);
  else if (key == "seed") t.seed = static_cast<std::uint64_t>(parse_int64_field(key, value));
  else if (key == "lr_initial") t.schedule.initial = parse_double_field(key, value);
  else if (key == "lr_plateau") t.schedule.plateau = parse_double_field(key, value);
  else if (key == "lr_decay_end") t.schedule.decay_end = parse_double_field(key, value);
  else if (key == "lr_plateau_end") t.schedule.plateau_end = parse_double_field(key, value);
  else if (key == "lr_drop1") t.schedule.drop1 = parse_double_field(key, value);
  else if (key == "lr_drop1_at") t.schedule.drop1_at = parse_double_field(key, value);
  else if (key == "lr_drop2") t.schedule.drop2 = parse_double_field(key, value);
  else if (key == "lr_drop2_at") t.schedule.drop2_at = parse_double_field(key, value);
  else if (key == "lr_time_scale") t.schedule.time_scale = parse_double_field(key, value);
  else if (key == "scale_schedule") t.scale_schedule = parse_bool_field(key, value);
  else if (key == "adam_beta1") t.adam.beta1 = parse_double_field(key, value);
  else if (key == "adam_beta2") t.adam.beta2 = parse_double_field(key, value);
  else if (key == "adam_epsilon") t.adam.epsilon = parse_double_field(key, value);
  else if (key == "synth_gratings") t.synth.gratings = parse_int_field(key, value);
  else if (key == "synth_blobs") t.synth.blobs = parse_int_field(key, value);
  else if (key == "synth_max_speed") t.synth.max_speed = parse_double_field(key, value);
  else if (key == "blur_sigma") t.degrade.sigma = parse_double_field(key, value);
  else if (key == "blur_radius") t.degrade.radius = parse_int_field(key, value);
  else if (key == "eval_every") t.eval_every = parse_int64_field(key, value);
  else if (key == "eval_clips") t.eval_clips = parse_int_field(key, value);
  else if (key == "eval_length") t.eval_length = parse_int_field(key, value);
  else if (key == "eval_lr_size") t.eval_lr_size = parse_int_field(key, value);
  else if (key == "eval_seed") t.eval_seed = static_cast<std::uint64_t>(parse_int64_field(key, value));
  else if (key == "skip_frames") t.protocol.skip_frames = parse_int_field(key, value);
  else if (key == "border_crop") t.protocol.border_crop = parse_int_field(key, value);
  else if (key == "threads") t.threads = parse_int_field(key, value);
  else if (key == "alpha") l.alpha = parse_double_field(key, value);
  else if (key == "epsilon") l.epsilon = parse_double_field(key, value);
  else return false;
  return true;
}

inline KeyValues to_key_values(const TrainConfig& t, const LossConfig& l) {
  return {
      {"iterations", std::to_string(t.iterations)},
      {"batch", std::to_string(t.batch)},
      {"lr_patch", std::to_string(t.lr_patch)},
      {"clip_length", std::to_string(t.clip_length)},
      {"context_frames", t.context_frames ? "true" : "false"},
      {"synth_lr_size", std::to_string(t.synth_lr_size)},
      {"seed", std::to_string(t.seed)},
      {"lr_initial", format_double(t.schedule.initial)},
      {"lr_plateau", format_double(t.schedule.plateau)},
      {"lr_decay_end", format_double(t.schedule.decay_end)},
      {"lr_plateau_end", format_double(t.schedule.plateau_end)},
      {"lr_drop1", format_double(t.schedule.drop1)},
      {"lr_drop1_at", format_double(t.schedule.drop1_at)},
      {"lr_drop2", format_double(t.schedule.drop2)},
      {"lr_drop2_at", format_double(t.schedule.drop2_at)},
      {"lr_time_scale", format_double(t.schedule.time_scale)},
      {"scale_schedule", t.scale_schedule ? "true" : "false"},
      {"adam_beta1", format_double(t.adam.beta1)},
      {"adam_beta2", format_double(t.adam.beta2)},
      {"adam_epsilon", format_double(t.adam.epsilon)},
      {"synth_gratings", std::to_string(t.synth.gratings)},
      {"synth_blobs", std::to_string(t.synth.blobs)},
      {"synth_max_speed", format_double(t.synth.max_speed)},
      {"blur_sigma", format_double(t.degrade.sigma)},
      {"blur_radius", std::to_string(t.degrade.radius)},
      {"eval_every", std::to_string(t.eval_every)},
      {"eval_clips", std::to_string(t.eval_clips)},
      {"eval_length", std::to_string(t.eval_length)},
      {"eval_lr_size", std::to_string(t.eval_lr_size)},
      {"eval_seed", std::to_string(t.eval_seed)},
      {"skip_frames", std::to_string(t.protocol.skip_frames)},
      {"border_crop", std::to_string(t.protocol.border_crop)},
      {"threads", std::to_string(t.threads)},
      {"alpha", format_double(l.alpha)},
      {"epsilon", format_double(l.epsilon)},
  };
}

// ---------------------------------------------------------------------------
// Data

// One training batch: `batch` independent synthetic clips, each cropped at a
// random LR-aligned position shared by all of its frames.
inline VideoSequence sample_batch(const TrainConfig& cfg, std::int64_t iteration) {
  const int frames = cfg.clip_length + (cfg.context_frames ? 2 : 0);
  const int factor = cfg.degrade.factor;
  std::vector<std::vector<Tensor>> lr(static_cast<std::size_t>(frames));
  std::vector<std::vector<Tensor>> hr(static_cast<std::size_t>(frames));
  for (int b = 0; b < cfg.batch; ++b) {
    const std::uint64_t clip_seed = mix_seed(mix_seed(cfg.seed, static_cast<std::uint64_t>(iteration)), b);
    const auto clip = synth_clip(clip_seed, frames, cfg.synth_lr_size * factor, cfg.synth_lr_size * factor, cfg.synth);
    const auto small = degrade(clip, cfg.degrade);
    std::mt19937_64 rng(mix_seed(clip_seed, 1));
    std::uniform_int_distribution<int> pos(0, cfg.synth_lr_size - cfg.lr_patch);
    const int y0 = pos(rng);
    const int x0 = pos(rng);
    for (int t = 0; t < frames; ++t) {
      lr[t].push_back(crop(small[t], y0, x0, cfg.lr_patch, cfg.lr_patch));
      hr[t].push_back(crop(clip[t], y0 * factor, x0 * factor, cfg.lr_patch * factor, cfg.lr_patch * factor));
    }
  }
  VideoSequence seq;
  seq.scale = factor;
  seq.padding = cfg.context_frames ? PaddingMode::kExtend : PaddingMode::kReplicate;
  for (int t = 0; t < frames; ++t) {
    seq.lr.push_back(stack_batch(lr[t]));
    seq.hr.push_back(stack_batch(hr[t]));
  }
  return seq;
}

// Held-out clips; depends only on eval_seed and the eval geometry.
inline std::vector<VideoSequence> make_eval_set(const TrainConfig& cfg) {
  std::vector<VideoSequence> set;
  const int size = cfg.eval_lr_size * cfg.degrade.factor;
  for (int i = 0; i < cfg.eval_clips; ++i) {
    set.push_back(make_sequence(synth_clip(mix_seed(cfg.eval_seed, i), cfg.eval_length, size, size, cfg.synth),
                                cfg.degrade, PaddingMode::kReplicate));
  }
  return set;
}

inline std::vector<Tensor> clamp_frames(const std::vector<Tensor>& frames) {
  std::vector<Tensor> out;
  for (const auto& f : frames) out.push_back(clamp01(f));
  return out;
}

inline std::vector<EvalRow> evaluate(const Model& model, const std::vector<VideoSequence>& set,
                                     const EvalProtocol& protocol) {
  NoGradScope no_grad;
  std::vector<EvalRow> rows;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const RunResult r = run_model(model, set[i]);
    const std::vector<Tensor> hr(set[i].hr.begin() + r.first_output,
                                 set[i].hr.begin() + r.first_output + static_cast<std::ptrdiff_t>(r.sr.size()));
    const SequenceScore s = score_sequence(clamp_frames(r.sr), hr, protocol);
    rows.push_back({"clip" + std::to_string(i), s.psnr, s.ssim});
  }
  return rows;
}

inline std::vector<EvalRow> evaluate_bicubic(const std::vector<VideoSequence>& set, const EvalProtocol& protocol) {
  std::vector<EvalRow> rows;
  for (std::size_t i = 0; i < set.size(); ++i) {
    std::vector<Tensor> sr;
    for (const auto& f : set[i].lr) sr.push_back(clamp01(bicubic_upsample(f, set[i].scale)));
    const SequenceScore s = score_sequence(sr, set[i].hr, protocol);
    rows.push_back({"clip" + std::to_string(i), s.psnr, s.ssim});
  }
  return rows;
}

inline double mean_psnr(const std::vector<EvalRow>& rows) {
  double s = 0;
  for (const auto& r : rows) s += r.psnr;
  return s / static_cast<double>(rows.size());
}

// ---------------------------------------------------------------------------
// Loop

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainLogRow {
  std::int64_t iteration = 0;
  double lr = 0;
  double loss = 0;
  double eval_psnr = std::numeric_limits<double>::quiet_NaN();  // NaN: not evaluated
};

struct TrainResult {
  Model model;
  std::vector<TrainLogRow> log;
  std::vector<EvalRow> final_eval;
  double final_eval_psnr = 0;
  double bicubic_eval_psnr = 0;
};

inline std::string loss_csv(const std::vector<TrainLogRow>& log) {
  std::string out = "iteration,lr,loss,eval_psnr\n";
  for (const auto& r : log) {
    out += std::to_string(r.iteration) + "," + format_double(r.lr) + "," + format_double(r.loss) + ",";
    if (!std::isnan(r.eval_psnr)) out += std::isinf(r.eval_psnr) ? "inf" : format_double(r.eval_psnr);
    out += "\n";
  }
  return out;
}

// Loss and gradients of one batch; gradients follow model.parameters() order.
struct StepOutput {
  double loss = 0;
  std::vector<Tensor> grads;
};

inline StepOutput loss_and_gradients(Model& model, const VideoSequence& seq, const LossConfig& loss_cfg) {
  GradientTape tape;
  const auto params = model.parameters();
  for (const Tensor* p : params) tape.watch(*p);
  Tensor loss;
  {
    TapeScope scope(tape);
    const RunResult r = run_model(model, seq);
    const std::vector<Tensor> hr(seq.hr.begin() + r.first_output,
                                 seq.hr.begin() + r.first_output + static_cast<std::ptrdiff_t>(r.sr.size()));
    loss = sequence_loss(r.sr, r.sr_p, hr, loss_cfg);
  }
  const Gradients g = backward(tape, loss);
  StepOutput out;
  out.loss = static_cast<double>(loss.item());
  for (const Tensor* p : params) out.grads.push_back(g.of(*p));
  return out;
}

using TrainCallback = std::function<void(const TrainLogRow&)>;

inline TrainResult train(const ModelConfig& model_cfg, const TrainConfig& cfg, const LossConfig& loss_cfg,
                         const TrainCallback& on_row = {}) {
  model_cfg.validate();
  cfg.validate();
  loss_cfg.validate();
  ThreadCountScope threads(cfg.threads);
  const LrSchedule schedule = cfg.effective_schedule();

  TrainResult result;
  result.model = init_model(model_cfg, mix_seed(cfg.seed, 0x1417));
  const auto eval_set = make_eval_set(cfg);
  result.bicubic_eval_psnr = mean_psnr(evaluate_bicubic(eval_set, cfg.protocol));

  OptimizerState state;
  // Batches depend only on (seed, iteration), so the next one can be produced
  // while the current step runs.
  const bool prefetch = cfg.threads > 1;
  std::future<VideoSequence> next;
  if (prefetch) next = std::async(std::launch::async, sample_batch, std::cref(cfg), std::int64_t{0});
  std::vector<double> recent;
  for (std::int64_t it = 0; it < cfg.iterations; ++it) {
    VideoSequence batch = prefetch ? next.get() : sample_batch(cfg, it);
    if (prefetch && it + 1 < cfg.iterations) {
      next = std::async(std::launch::async, sample_batch, std::cref(cfg), it + 1);
    }
    const double lr = lr_at(it, schedule);
    auto diverged = [&](const std::string& what) {
      std::ostringstream msg;
      msg << "non-finite loss (" << what << ") at iteration " << it << " (lr " << lr << ", model "
          << model_cfg.name() << ", seed " << cfg.seed << "); last losses:";
      for (double v : recent) msg << " " << v;
      return TrainingError(msg.str());
    };
    StepOutput step;
    try {
      step = loss_and_gradients(result.model, batch, loss_cfg);
    } catch (const NonFiniteError& e) {
      throw diverged(e.what());
    }
    if (!std::isfinite(step.loss)) {
      std::ostringstream v;
      v << step.loss;
      throw diverged(v.str());
    }
    adam_step(result.model.parameters(), step.grads, state, lr, cfg.adam);
    recent.push_back(step.loss);
    if (recent.size() > 5) recent.erase(recent.begin());

    TrainLogRow row{it, lr, step.loss};
    const bool last = it + 1 == cfg.iterations;
    if (last || (cfg.eval_every > 0 && (it + 1) % cfg.eval_every == 0)) {
      auto rows = evaluate(result.model, eval_set, cfg.protocol);
      row.eval_psnr = mean_psnr(rows);
      if (last) result.final_eval = std::move(rows);
    }
    result.log.push_back(row);
    if (on_row) on_row(row);
  }
  result.final_eval_psnr = result.log.back().eval_psnr;
  return result;
}

}  // namespace ovsr
