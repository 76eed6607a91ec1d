#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "ovsr/tensor.hpp"

namespace ovsr {

// Backward kernel of a recorded op. `grad_inputs[i]` is an accumulation buffer
// for input i, or an empty span when input i does not need a gradient.
using BackwardFn = std::function<void(std::span<const Scalar> grad_output,
                                      std::span<const std::span<Scalar>> grad_inputs)>;

class GradientTape;

namespace detail {
inline thread_local GradientTape* active_tape = nullptr;
}

// Gradients of watched tensors, keyed by tensor identity.
class Gradients {
 public:
  bool contains(const Tensor& t) const { return grads_.count(t.id()) != 0; }
  const Tensor& of(const Tensor& t) const {
    auto it = grads_.find(t.id());
    if (it == grads_.end()) throw std::out_of_range("no gradient recorded for tensor");
    return it->second;
  }
  void set(std::uint64_t id, Tensor g) { grads_[id] = std::move(g); }
  std::size_t size() const { return grads_.size(); }

 private:
  std::unordered_map<std::uint64_t, Tensor> grads_;
};

// Records differentiable ops in execution order. Ops consult the tape active on
// the current thread (see TapeScope); the tape itself is single-writer.
class GradientTape {
 public:
  GradientTape() = default;
  GradientTape(const GradientTape&) = delete;
  GradientTape& operator=(const GradientTape&) = delete;
  ~GradientTape() {
    if (detail::active_tape == this) detail::active_tape = nullptr;
  }

  static GradientTape* active() { return detail::active_tape; }

  // Marks `t` as a differentiable leaf.
  void watch(const Tensor& t) {
    if (!t.defined()) throw std::invalid_argument("watch() on undefined tensor");
    if (slots_.count(t.id())) return;
    const int slot = new_slot(t.shape());
    slots_[t.id()] = slot;
    watched_.push_back({t.id(), slot});
    watched_slot_[slot] = true;
  }

  bool tracks(const Tensor& t) const { return t.defined() && slots_.count(t.id()) != 0; }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  void record(std::span<const Tensor> inputs, const Tensor& output, BackwardFn fn) {
    Entry e;
    e.inputs.reserve(inputs.size());
    bool any = false;
    for (const auto& in : inputs) {
      auto it = in.defined() ? slots_.find(in.id()) : slots_.end();
      e.inputs.push_back(it == slots_.end() ? -1 : it->second);
      any = any || it != slots_.end();
    }
    if (!any) return;
    e.output = new_slot(output.shape());
    slots_[output.id()] = e.output;
    e.fn = std::move(fn);
    entries_.push_back(std::move(e));
  }

  // Reverse replay from a scalar loss; returns gradients of every watched
  // tensor (zeros when unreachable) and clears the tape.
  Gradients backward(const Tensor& loss) {
    if (entries_.empty()) throw std::logic_error("backward on an empty tape");
    if (!loss.shape().is_scalar()) {
      throw DimensionError("loss", "backward needs a scalar loss, got " + loss.shape().str());
    }
    auto found = slots_.find(loss.id());
    if (found == slots_.end()) throw std::logic_error("loss was not recorded on this tape");

    std::vector<std::vector<Scalar>> grads(shapes_.size());
    grads[found->second].assign(1, Scalar{1});
    std::vector<std::span<Scalar>> views;
    for (auto e = entries_.rbegin(); e != entries_.rend(); ++e) {
      const auto& gout = grads[e->output];
      if (gout.empty()) continue;
      views.assign(e->inputs.size(), {});
      for (std::size_t i = 0; i < e->inputs.size(); ++i) {
        const int s = e->inputs[i];
        if (s < 0) continue;
        auto& g = grads[s];
        if (g.empty()) g.assign(static_cast<std::size_t>(shapes_[s].numel()), Scalar{0});
        views[i] = g;
      }
      e->fn(gout, views);
      // Intermediate gradients are dead once propagated.
      if (!is_watched_slot(e->output)) std::vector<Scalar>().swap(grads[e->output]);
    }

    Gradients out;
    for (const auto& [id, slot] : watched_) {
      auto& g = grads[slot];
      if (g.empty()) g.assign(static_cast<std::size_t>(shapes_[slot].numel()), Scalar{0});
      out.set(id, Tensor(shapes_[slot], std::move(g)));
    }
    clear();
    return out;
  }

  void clear() {
    entries_.clear();
    slots_.clear();
    shapes_.clear();
    watched_.clear();
    watched_slot_.clear();
  }

 private:
  struct Entry {
    std::vector<int> inputs;
    int output = -1;
    BackwardFn fn;
  };

  int new_slot(const Shape& s) {
    shapes_.push_back(s);
    watched_slot_.push_back(false);
    return static_cast<int>(shapes_.size()) - 1;
  }

  bool is_watched_slot(int slot) const { return watched_slot_[slot]; }

  std::vector<Entry> entries_;
  std::unordered_map<std::uint64_t, int> slots_;
  std::vector<Shape> shapes_;
  std::vector<std::pair<std::uint64_t, int>> watched_;
  std::vector<bool> watched_slot_;
};

// Makes `tape` the active tape of the current thread for the scope lifetime.
class TapeScope {
 public:
  explicit TapeScope(GradientTape& tape) : saved_(detail::active_tape) { detail::active_tape = &tape; }
  ~TapeScope() { detail::active_tape = saved_; }
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  GradientTape* saved_;
};

// Suspends recording (inference inside a training step, metrics, ...).
class NoGradScope {
 public:
  NoGradScope() : saved_(detail::active_tape) { detail::active_tape = nullptr; }
  ~NoGradScope() { detail::active_tape = saved_; }
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  GradientTape* saved_;
};

inline Gradients backward(GradientTape& tape, const Tensor& loss) { return tape.backward(loss); }

namespace detail {

inline bool recording(std::initializer_list<const Tensor*> inputs) {
  auto* tape = GradientTape::active();
  if (tape == nullptr) return false;
  for (const auto* t : inputs) {
    if (tape->tracks(*t)) return true;
  }
  return false;
}

inline void record(std::span<const Tensor> inputs, const Tensor& output, BackwardFn fn) {
  if (auto* tape = GradientTape::active()) tape->record(inputs, output, std::move(fn));
}

}  // namespace detail

}  // namespace ovsr
