#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ovsr/autodiff.hpp"
#include "ovsr/generator.hpp"
#include "ovsr/model.hpp"
#include "ovsr/ops.hpp"
#include "ovsr/parallel.hpp"
#include "ovsr/resample.hpp"

namespace ovsr {

// kReplicate: neighbours outside the clip repeat the first/last frame.
// kExtend: the first and last frames are context only; they feed their
// neighbours' windows and hidden states but produce no output.
enum class PaddingMode { kReplicate, kExtend };

struct VideoSequence {
  std::vector<Tensor> lr;  // T frames, each (B, C, h, w)
  std::vector<Tensor> hr;  // optional, each (B, C, scale*h, scale*w)
  int scale = 4;
  PaddingMode padding = PaddingMode::kReplicate;

  int length() const { return static_cast<int>(lr.size()); }
  int first_output() const { return padding == PaddingMode::kExtend ? 1 : 0; }
  int output_count() const { return std::max(0, length() - 2 * first_output()); }

  void validate() const {
    if (lr.empty()) throw std::invalid_argument("empty sequence");
    if (padding == PaddingMode::kExtend && lr.size() < 3) {
      throw std::invalid_argument("extend padding needs at least 3 frames");
    }
    const Shape& s = lr.front().shape();
    for (const auto& f : lr) {
      if (!(f.shape() == s)) throw DimensionError("frames", "frame " + f.shape().str() + " vs " + s.str());
    }
    if (!hr.empty()) {
      if (hr.size() != lr.size()) throw DimensionError("frames", "LR/HR frame counts differ");
      const Shape want{s.n, s.c, s.h * scale, s.w * scale};
      for (const auto& f : hr) {
        if (!(f.shape() == want)) throw DimensionError("hr", "HR frame " + f.shape().str() + " expected " + want.str());
      }
    }
  }
};

enum class Provenance { kPrecursor, kSuccessor, kGenerator };

struct HiddenState {
  Tensor tensor;
  Provenance provenance = Provenance::kSuccessor;
  int timestep = 0;
};

enum class Direction { kForward, kBackward };

// ---------------------------------------------------------------------------
// Trace

enum class NetKind { kPrecursor, kSuccessor, kGenerator, kCombine };
enum class SignalKind { kFrame, kHiddenP, kHiddenS, kHidden, kSrP, kSrS, kSr };

struct Signal {
  SignalKind kind = SignalKind::kFrame;
  int t = 0;
  bool zero = false;    // a zero tensor stood in for this input
  bool masked = false;  // zeroed by an ablation mask

  friend bool operator<(const Signal& a, const Signal& b) {
    return std::pair{a.kind, a.t} < std::pair{b.kind, b.t};
  }

  std::string str() const {
    static const char* names[] = {"I", "Hp", "Hs", "H", "SRp", "SRs", "SR"};
    std::string s = std::string(names[static_cast<int>(kind)]) + "[" + std::to_string(t) + "]";
    if (masked) s += ":masked";
    else if (zero) s += ":zero";
    return s;
  }
};

inline bool is_hidden(SignalKind k) {
  return k == SignalKind::kHiddenP || k == SignalKind::kHiddenS || k == SignalKind::kHidden;
}

struct TraceStep {
  NetKind net = NetKind::kGenerator;
  int t = 0;
  std::vector<Signal> consumed;
  std::vector<Signal> produced;
};

inline std::string to_string(NetKind n) {
  switch (n) {
    case NetKind::kPrecursor: return "precursor";
    case NetKind::kSuccessor: return "successor";
    case NetKind::kGenerator: return "generator";
    case NetKind::kCombine: return "combine";
  }
  return "?";
}

struct ScheduleTrace {
  int length = 0;  // number of frames in the sequence
  std::vector<TraceStep> steps;

  void append(const ScheduleTrace& other) {
    steps.insert(steps.end(), other.steps.begin(), other.steps.end());
  }

  // One line per step: "<net> t=<t> consumes a,b,... produces c,d,...".
  std::string to_text() const {
    std::ostringstream os;
    auto join = [&](const std::vector<Signal>& v) {
      for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i].str();
    };
    for (const auto& s : steps) {
      os << to_string(s.net) << " t=" << s.t << " consumes ";
      join(s.consumed);
      os << " produces ";
      join(s.produced);
      os << "\n";
    }
    return os.str();
  }
};

// Returns every dataflow violation found (empty when sound): hidden states or
// SR frames consumed before being produced, zero stand-ins that are neither
// boundary, masked nor produced as zeros, frame reads outside the clip, and
// signals produced twice.
inline std::vector<std::string> audit_trace(const ScheduleTrace& trace) {
  std::vector<std::string> problems;
  std::set<Signal> produced;
  std::set<Signal> produced_zero;
  auto in_range = [&](int t) { return t >= 0 && t < trace.length; };
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const auto& step = trace.steps[i];
    const std::string where = "step " + std::to_string(i) + " (" + to_string(step.net) + " t=" +
                              std::to_string(step.t) + "): ";
    for (const auto& c : step.consumed) {
      if (c.kind == SignalKind::kFrame) {
        if (!in_range(c.t)) problems.push_back(where + "reads frame outside clip " + c.str());
        continue;
      }
      if (c.zero) {
        const bool ok = c.masked || !in_range(c.t) || produced_zero.count(c) != 0;
        if (!ok) problems.push_back(where + "zero stand-in for in-range " + c.str());
        if (!is_hidden(c.kind) && !c.masked) problems.push_back(where + "zero stand-in for non-hidden " + c.str());
        continue;
      }
      if (produced.count(c) == 0) problems.push_back(where + "consumes " + c.str() + " before it is produced");
    }
    for (const auto& p : step.produced) {
      if (produced.count(p) || produced_zero.count(p)) problems.push_back(where + "produces " + p.str() + " twice");
      (p.zero ? produced_zero : produced).insert(p);
    }
  }
  return problems;
}

// LR frame indices from which a produced signal is reachable in the trace's
// dependency graph.
inline std::set<int> contributing_frames(const ScheduleTrace& trace, Signal target) {
  std::map<Signal, const TraceStep*> producer;
  for (const auto& s : trace.steps) {
    for (const auto& p : s.produced) producer[p] = &s;
  }
  std::set<int> frames;
  std::set<Signal> seen{target};
  std::vector<Signal> stack{target};
  while (!stack.empty()) {
    const Signal cur = stack.back();
    stack.pop_back();
    auto it = producer.find(cur);
    if (it == producer.end()) continue;
    for (const auto& c : it->second->consumed) {
      if (c.zero) continue;
      if (c.kind == SignalKind::kFrame) {
        frames.insert(c.t);
      } else if (seen.insert(c).second) {
        stack.push_back(c);
      }
    }
  }
  return frames;
}

// ---------------------------------------------------------------------------
// Input masks

enum class InputName { kPrevFrame, kCurFrame, kNextFrame, kPrevHidden, kCurHidden, kNextHidden };
enum class MaskTarget { kGenerator, kPrecursor, kSuccessor, kBoth };

inline std::string to_string(InputName n) {
  switch (n) {
    case InputName::kPrevFrame: return "I_{t-1}";
    case InputName::kCurFrame: return "I_t";
    case InputName::kNextFrame: return "I_{t+1}";
    case InputName::kPrevHidden: return "H_{t-1}";
    case InputName::kCurHidden: return "H_t";
    case InputName::kNextHidden: return "H_{t+1}";
  }
  return "?";
}

inline InputName parse_input_name(const std::string& text) {
  const std::string s = lowercase(text);
  if (s == "i_{t-1}" || s == "i-1" || s == "prev_frame") return InputName::kPrevFrame;
  if (s == "i_t" || s == "i" || s == "frame") return InputName::kCurFrame;
  if (s == "i_{t+1}" || s == "i+1" || s == "next_frame") return InputName::kNextFrame;
  if (s == "h_{t-1}" || s == "h-1" || s == "prev_hidden") return InputName::kPrevHidden;
  if (s == "h_t" || s == "h" || s == "hidden") return InputName::kCurHidden;
  if (s == "h_{t+1}" || s == "h+1" || s == "next_hidden") return InputName::kNextHidden;
  throw ConfigError("mask", "unknown input '" + text + "'");
}

inline std::string to_string(MaskTarget t) {
  switch (t) {
    case MaskTarget::kGenerator: return "G";
    case MaskTarget::kPrecursor: return "Net_p";
    case MaskTarget::kSuccessor: return "Net_s";
    case MaskTarget::kBoth: return "Both";
  }
  return "?";
}

struct MaskEntry {
  MaskTarget target = MaskTarget::kGenerator;
  InputName input = InputName::kCurFrame;
};

using InputMask = std::vector<MaskEntry>;

// The framework never consumes the named input (a "-" cell of the ablation grid).
class NotAnInputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Inputs a network reads. The precursor's recurrent hidden is named H_{t-1}
// ("previous in processing order") for both directions.
inline std::set<InputName> consumed_inputs(const ModelConfig& cfg, NetKind net) {
  using enum InputName;
  switch (cfg.framework) {
    case Framework::kIvsr:
      return net == NetKind::kGenerator ? std::set{kPrevFrame, kCurFrame, kNextFrame} : std::set<InputName>{};
    case Framework::kRvsr:
      return net == NetKind::kGenerator ? std::set{kPrevFrame, kCurFrame, kPrevHidden} : std::set<InputName>{};
    case Framework::kHvsr:
      return net == NetKind::kGenerator ? std::set{kPrevFrame, kCurFrame, kNextFrame, kPrevHidden}
                                        : std::set<InputName>{};
    case Framework::kLovsr:
    case Framework::kGovsr:
      if (net == NetKind::kPrecursor) {
        return cfg.has_precursor() ? std::set{kPrevFrame, kCurFrame, kNextFrame, kPrevHidden} : std::set<InputName>{};
      }
      if (net == NetKind::kSuccessor) {
        return {kPrevFrame, kCurFrame, kNextFrame, kPrevHidden, kCurHidden, kNextHidden};
      }
      return {};
  }
  return {};
}

struct ResolvedMask {
  std::set<InputName> precursor;
  std::set<InputName> successor;  // also the baseline generator

  bool masks(NetKind net, InputName in) const {
    const auto& s = net == NetKind::kPrecursor ? precursor : successor;
    return s.count(in) != 0;
  }
  bool empty() const { return precursor.empty() && successor.empty(); }
};

inline ResolvedMask resolve_mask(const ModelConfig& cfg, const InputMask& mask) {
  ResolvedMask r;
  const bool omni = is_omniscient(cfg.framework);
  for (const auto& e : mask) {
    auto need = [&](NetKind net) {
      if (!consumed_inputs(cfg, net).count(e.input)) {
        throw NotAnInputError(to_string(e.input) + " is not an input of " + to_string(e.target) + " in " +
                              to_string(cfg.framework));
      }
    };
    switch (e.target) {
      case MaskTarget::kGenerator:
        if (omni) throw NotAnInputError(to_string(cfg.framework) + " has no single generator G");
        need(NetKind::kGenerator);
        r.successor.insert(e.input);
        break;
      case MaskTarget::kPrecursor:
        if (!omni) throw NotAnInputError(to_string(cfg.framework) + " has no precursor network");
        need(NetKind::kPrecursor);
        r.precursor.insert(e.input);
        break;
      case MaskTarget::kSuccessor:
        if (!omni) throw NotAnInputError(to_string(cfg.framework) + " has no successor network");
        need(NetKind::kSuccessor);
        r.successor.insert(e.input);
        break;
      case MaskTarget::kBoth:
        if (!omni) throw NotAnInputError(to_string(cfg.framework) + " has no precursor/successor pair");
        need(NetKind::kPrecursor);
        need(NetKind::kSuccessor);
        r.precursor.insert(e.input);
        r.successor.insert(e.input);
        break;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Scheduling

namespace detail {

struct FrameSource {
  const VideoSequence& seq;
  Tensor zero_frame;
  Tensor zero_hidden;

  FrameSource(const VideoSequence& s, int filters) : seq(s) {
    const Shape& fs = s.lr.front().shape();
    zero_frame = Tensor::zeros(fs);
    zero_hidden = Tensor::zeros({fs.n, filters, fs.h, fs.w});
  }

  int clamp(int t) const { return std::clamp(t, 0, seq.length() - 1); }

  // Frame at nominal index t (replicated at the ends), or zeros when masked.
  Tensor frame(int t, bool masked, std::vector<Signal>& consumed) const {
    const int idx = clamp(t);
    consumed.push_back({SignalKind::kFrame, idx, masked, masked});
    return masked ? zero_frame : seq.lr[idx];
  }

  Tensor bicubic(int t) const { return bicubic_upsample(seq.lr[t], seq.scale); }
};

inline void require_scale(const Model& model, const VideoSequence& seq) {
  if (seq.scale != model.config.scale) {
    throw ConfigError("scale", "sequence scale " + std::to_string(seq.scale) + " != model scale " +
                                   std::to_string(model.config.scale));
  }
  if (seq.lr.front().shape().c != model.config.image_channels) {
    throw DimensionError("channels", "frames have " + std::to_string(seq.lr.front().shape().c) +
                                         " channels, model expects " + std::to_string(model.config.image_channels));
  }
}

}  // namespace detail

struct PrecursorResult {
  std::vector<Tensor> sr_p;           // indexed by timestep
  std::vector<HiddenState> hidden;    // H^p, indexed by timestep
  ScheduleTrace trace;
};

// Net_p over the whole clip: forward for LOVSR (recurrent H_{t-1}^p, paired
// with the past stream), backward for GOVSR (recurrent H_{t+1}^p, paired with
// the future stream). Without a precursor network H^p is zero and SR_p is the
// configured base.
inline PrecursorResult run_precursor(const Model& model, const VideoSequence& seq, Direction direction,
                                     const ResolvedMask& mask = {}) {
  seq.validate();
  detail::require_scale(model, seq);
  const ModelConfig& cfg = model.config;
  const int T = seq.length();
  detail::FrameSource src(seq, cfg.filters);
  PrecursorResult r;
  r.sr_p.resize(T);
  r.hidden.resize(T);
  r.trace.length = T;

  auto base = [&](int t) {
    return cfg.precursor_base == PrecursorBase::kBicubic ? src.bicubic(t)
                                                         : Tensor::zeros(src.bicubic(t).shape());
  };

  const int step = direction == Direction::kForward ? 1 : -1;
  const int start = direction == Direction::kForward ? 0 : T - 1;
  const int hidden_stream = direction == Direction::kForward ? 0 : 2;
  Tensor recurrent = src.zero_hidden;
  for (int i = 0, t = start; i < T; ++i, t += step) {
    TraceStep ts{NetKind::kPrecursor, t, {}, {}};
    if (!model.precursor) {
      if (cfg.precursor_base == PrecursorBase::kBicubic) ts.consumed.push_back({SignalKind::kFrame, t});
      r.sr_p[t] = base(t);
      r.hidden[t] = {src.zero_hidden, Provenance::kPrecursor, t};
      ts.produced = {{SignalKind::kHiddenP, t, true}, {SignalKind::kSrP, t}};
      r.trace.steps.push_back(std::move(ts));
      continue;
    }
    const GeneratorParams& net = *model.precursor;
    std::vector<Tensor> frames;
    frames.push_back(src.frame(t - 1, mask.masks(NetKind::kPrecursor, InputName::kPrevFrame), ts.consumed));
    frames.push_back(src.frame(t, mask.masks(NetKind::kPrecursor, InputName::kCurFrame), ts.consumed));
    frames.push_back(src.frame(t + 1, mask.masks(NetKind::kPrecursor, InputName::kNextFrame), ts.consumed));
    std::vector<Tensor> hiddens(frames.size(), src.zero_hidden);
    const int prev_t = t - step;
    const bool boundary = prev_t < 0 || prev_t >= T;
    const bool masked = mask.masks(NetKind::kPrecursor, InputName::kPrevHidden);
    ts.consumed.push_back({SignalKind::kHiddenP, prev_t, boundary || masked, masked});
    if (!boundary && !masked) hiddens[hidden_stream] = recurrent;

    GeneratorOutput out = generator_forward(net, frames, hiddens);
    if (cfg.precursor_base == PrecursorBase::kBicubic && mask.masks(NetKind::kPrecursor, InputName::kCurFrame)) {
      ts.consumed.push_back({SignalKind::kFrame, t});
    }
    r.sr_p[t] = add(out.residual, base(t));
    r.hidden[t] = {out.hidden, Provenance::kPrecursor, t};
    recurrent = out.hidden;
    ts.produced = {{SignalKind::kHiddenP, t}, {SignalKind::kSrP, t}};
    r.trace.steps.push_back(std::move(ts));
  }
  return r;
}

struct SuccessorResult {
  std::vector<Tensor> sr_s;
  std::vector<HiddenState> hidden;  // H^s
  ScheduleTrace trace;
};

// Net_s, always forward: streams (I_{t-1}, H^s_{t-1}), (I_t, H^p_t),
// (I_{t+1}, H^p_{t+1}); H^s_{-1} and H^p_T are zero.
inline SuccessorResult run_successor(const Model& model, const VideoSequence& seq,
                                     const std::vector<HiddenState>& hidden_p, const ResolvedMask& mask = {}) {
  seq.validate();
  detail::require_scale(model, seq);
  if (!is_omniscient(model.config.framework)) {
    throw ConfigError("framework", to_string(model.config.framework) + " has no successor network");
  }
  const int T = seq.length();
  if (static_cast<int>(hidden_p.size()) != T) {
    throw std::invalid_argument("missing precursor states: have " + std::to_string(hidden_p.size()) + " for " +
                                std::to_string(T) + " frames");
  }
  for (int t = 0; t < T; ++t) {
    if (!hidden_p[t].tensor.defined() || hidden_p[t].timestep != t) {
      throw std::invalid_argument("missing precursor state for t=" + std::to_string(t));
    }
  }
  detail::FrameSource src(seq, model.config.filters);
  const bool precursor_zero = !model.precursor;
  SuccessorResult r;
  r.sr_s.resize(T);
  r.hidden.resize(T);
  r.trace.length = T;
  Tensor prev = src.zero_hidden;
  for (int t = 0; t < T; ++t) {
    TraceStep ts{NetKind::kSuccessor, t, {}, {}};
    std::vector<Tensor> frames;
    frames.push_back(src.frame(t - 1, mask.masks(NetKind::kSuccessor, InputName::kPrevFrame), ts.consumed));
    frames.push_back(src.frame(t, mask.masks(NetKind::kSuccessor, InputName::kCurFrame), ts.consumed));
    frames.push_back(src.frame(t + 1, mask.masks(NetKind::kSuccessor, InputName::kNextFrame), ts.consumed));
    std::vector<Tensor> hiddens(3, src.zero_hidden);

    const bool m_prev = mask.masks(NetKind::kSuccessor, InputName::kPrevHidden);
    ts.consumed.push_back({SignalKind::kHiddenS, t - 1, t == 0 || m_prev, m_prev});
    if (t > 0 && !m_prev) hiddens[0] = prev;

    const bool m_cur = mask.masks(NetKind::kSuccessor, InputName::kCurHidden);
    ts.consumed.push_back({SignalKind::kHiddenP, t, m_cur || precursor_zero, m_cur});
    if (!m_cur) hiddens[1] = hidden_p[t].tensor;

    const bool m_next = mask.masks(NetKind::kSuccessor, InputName::kNextHidden);
    const bool past_end = t + 1 >= T;
    ts.consumed.push_back({SignalKind::kHiddenP, t + 1, past_end || m_next || precursor_zero, m_next});
    if (!past_end && !m_next) hiddens[2] = hidden_p[t + 1].tensor;

    GeneratorOutput out = generator_forward(model.successor, frames, hiddens);
    r.sr_s[t] = out.residual;
    r.hidden[t] = {out.hidden, Provenance::kSuccessor, t};
    prev = out.hidden;
    ts.produced = {{SignalKind::kHiddenS, t}, {SignalKind::kSrS, t}};
    r.trace.steps.push_back(std::move(ts));
  }
  return r;
}

// Refinement: SR = SR_s + SR_p, exactly.
inline Tensor combine(const Tensor& sr_p, const Tensor& sr_s) { return add(sr_s, sr_p); }

inline std::vector<Tensor> combine(const std::vector<Tensor>& sr_p, const std::vector<Tensor>& sr_s) {
  if (sr_p.size() != sr_s.size()) throw DimensionError("frames", "SR_p and SR_s frame counts differ");
  std::vector<Tensor> out;
  for (std::size_t t = 0; t < sr_p.size(); ++t) out.push_back(combine(sr_p[t], sr_s[t]));
  return out;
}

struct BaselineResult {
  std::vector<Tensor> sr;
  std::vector<HiddenState> hidden;
  ScheduleTrace trace;
};

// Single-generator frameworks; every output adds bicubic(I_t) as residual base.
//   IVSR: (I_{t-1}, I_t, I_{t+1}), no hidden, independent per t.
//   RVSR: (I_{t-1}, I_t) + H_{t-1}; the third stream is all zeros.
//   HVSR: (I_{t-1}, I_t, I_{t+1}[, I_{t+2}]) + H_{t-1}.
// `order` optionally permutes IVSR processing order.
inline BaselineResult run_baseline(const Model& model, const VideoSequence& seq, const ResolvedMask& mask = {},
                                   std::vector<int> order = {}) {
  seq.validate();
  detail::require_scale(model, seq);
  const ModelConfig& cfg = model.config;
  if (is_omniscient(cfg.framework)) {
    throw ConfigError("framework", to_string(cfg.framework) + " is not a single-generator framework");
  }
  const int T = seq.length();
  if (order.empty()) {
    order.resize(T);
    std::iota(order.begin(), order.end(), 0);
  } else {
    if (cfg.framework != Framework::kIvsr) throw ConfigError("order", "only IVSR frames are order-independent");
    std::vector<int> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (int t = 0; t < T; ++t) {
      if (static_cast<int>(sorted.size()) != T || sorted[t] != t) throw ConfigError("order", "not a permutation");
    }
  }
  detail::FrameSource src(seq, cfg.filters);
  BaselineResult r;
  r.sr.resize(T);
  r.hidden.resize(T);
  r.trace.length = T;
  std::vector<TraceStep> steps(T);

  auto step_at = [&](int t, const Tensor& prev) {
    TraceStep ts{NetKind::kGenerator, t, {}, {}};
    auto masked = [&](InputName n) { return mask.masks(NetKind::kGenerator, n); };
    std::vector<Tensor> frames;
    frames.push_back(src.frame(t - 1, masked(InputName::kPrevFrame), ts.consumed));
    frames.push_back(src.frame(t, masked(InputName::kCurFrame), ts.consumed));
    if (cfg.framework == Framework::kRvsr) {
      frames.push_back(src.zero_frame);
    } else {
      frames.push_back(src.frame(t + 1, masked(InputName::kNextFrame), ts.consumed));
    }
    if (cfg.window == 4) frames.push_back(src.frame(t + 2, false, ts.consumed));
    std::vector<Tensor> hiddens(frames.size(), src.zero_hidden);
    if (cfg.framework != Framework::kIvsr) {
      const bool m = masked(InputName::kPrevHidden);
      ts.consumed.push_back({SignalKind::kHidden, t - 1, t == 0 || m, m});
      if (t > 0 && !m) hiddens[0] = prev;
    }
    if (masked(InputName::kCurFrame)) ts.consumed.push_back({SignalKind::kFrame, t});
    GeneratorOutput out = generator_forward(model.successor, frames, hiddens);
    r.sr[t] = add(out.residual, src.bicubic(t));
    r.hidden[t] = {out.hidden, Provenance::kGenerator, t};
    ts.produced = {{SignalKind::kHidden, t}, {SignalKind::kSr, t}};
    steps[t] = std::move(ts);
    return out.hidden;
  };

  if (cfg.framework == Framework::kIvsr) {
    if (GradientTape::active() == nullptr) {
      // Stateless timesteps run concurrently; outputs land in per-t slots.
      parallel_for(order.size(), [&](std::size_t i) { step_at(order[i], src.zero_hidden); });
    } else {
      for (int t : order) step_at(t, src.zero_hidden);
    }
    for (int t : order) r.trace.steps.push_back(steps[t]);
  } else {
    Tensor prev = src.zero_hidden;
    for (int t = 0; t < T; ++t) {
      prev = step_at(t, prev);
      r.trace.steps.push_back(steps[t]);
    }
  }
  return r;
}

struct RunResult {
  int first_output = 0;  // sequence index of sr[0]
  std::vector<Tensor> sr;
  std::vector<Tensor> sr_p;  // omniscient only: precursor output or bicubic
  std::vector<Tensor> sr_s;  // omniscient only
  std::vector<HiddenState> hidden_p;
  std::vector<HiddenState> hidden_s;  // H^s, or H for the baselines
  ScheduleTrace trace;
};

// Full inference/training pass for any framework.
inline RunResult run_model(const Model& model, const VideoSequence& seq, const ResolvedMask& mask = {}) {
  seq.validate();
  const ModelConfig& cfg = model.config;
  RunResult r;
  r.first_output = seq.first_output();
  const int T = seq.length();
  const int lo = seq.first_output();
  const int hi = T - lo;
  r.trace.length = T;

  if (!is_omniscient(cfg.framework)) {
    BaselineResult b = run_baseline(model, seq, mask);
    r.sr.assign(b.sr.begin() + lo, b.sr.begin() + hi);
    r.hidden_s = std::move(b.hidden);
    r.trace = std::move(b.trace);
    return r;
  }

  const Direction dir = cfg.framework == Framework::kLovsr ? Direction::kForward : Direction::kBackward;
  PrecursorResult p = run_precursor(model, seq, dir, mask);
  SuccessorResult s = run_successor(model, seq, p.hidden, mask);
  r.trace.append(p.trace);
  r.trace.append(s.trace);
  for (int t = lo; t < hi; ++t) {
    Tensor base = cfg.refine == RefineMode::kBicubic ? bicubic_upsample(seq.lr[t], seq.scale) : p.sr_p[t];
    r.sr_p.push_back(base);
    r.sr_s.push_back(s.sr_s[t]);
    r.sr.push_back(combine(base, s.sr_s[t]));
    TraceStep ts{NetKind::kCombine, t, {{SignalKind::kSrS, t}}, {{SignalKind::kSr, t}}};
    if (cfg.refine == RefineMode::kBicubic) ts.consumed.push_back({SignalKind::kFrame, t});
    else ts.consumed.push_back({SignalKind::kSrP, t});
    r.trace.steps.push_back(std::move(ts));
  }
  r.hidden_p = std::move(p.hidden);
  r.hidden_s = std::move(s.hidden);
  return r;
}

// Inference with some inputs replaced by zeros; throws NotAnInputError for
// inputs the framework never reads.
inline RunResult ablate_input(const Model& model, const VideoSequence& seq, const InputMask& mask) {
  return run_model(model, seq, resolve_mask(model.config, mask));
}

}  // namespace ovsr
