#pragma once

#include <algorithm>
#include <atomic>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ovsr {

#ifdef OVSR_FLOAT32
using Scalar = float;
#else
using Scalar = double;
#endif

// Raised when tensor shapes are incompatible. `axis()` names the offending
// axis ("batch", "channels", "height", "width", "kernel", ...).
class DimensionError : public std::invalid_argument {
 public:
  DimensionError(std::string axis, const std::string& message)
      : std::invalid_argument(axis + ": " + message), axis_(std::move(axis)) {}
  const std::string& axis() const noexcept { return axis_; }

 private:
  std::string axis_;
};

struct Shape {
  std::int64_t n = 0;
  std::int64_t c = 0;
  std::int64_t h = 0;
  std::int64_t w = 0;

  std::int64_t numel() const { return n * c * h * w; }
  std::int64_t plane() const { return h * w; }
  bool is_scalar() const { return n == 1 && c == 1 && h == 1 && w == 1; }
  friend bool operator==(const Shape&, const Shape&) = default;

  std::string str() const {
    std::ostringstream os;
    os << "(" << n << "," << c << "," << h << "," << w << ")";
    return os.str();
  }
};

namespace detail {
inline std::uint64_t next_tensor_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter++;
}
}  // namespace detail

// Dense NCHW tensor. Copies share storage and identity; a tensor is treated as
// immutable once it has been handed to another op.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape)
      : shape_(shape),
        data_(std::make_shared<std::vector<Scalar>>(checked_numel(shape), Scalar{0})),
        id_(detail::next_tensor_id()) {}

  Tensor(Shape shape, std::vector<Scalar> values)
      : shape_(shape),
        data_(std::make_shared<std::vector<Scalar>>(std::move(values))),
        id_(detail::next_tensor_id()) {
    if (static_cast<std::int64_t>(data_->size()) != checked_numel(shape)) {
      throw DimensionError("data", "length " + std::to_string(data_->size()) +
                                       " does not match shape " + shape.str());
    }
  }

  static Tensor zeros(Shape shape) { return Tensor(shape); }
  static Tensor full(Shape shape, Scalar value) {
    return Tensor(shape, std::vector<Scalar>(checked_numel(shape), value));
  }
  static Tensor scalar(Scalar value) { return Tensor({1, 1, 1, 1}, {value}); }

  bool defined() const { return data_ != nullptr; }
  const Shape& shape() const { return shape_; }
  std::int64_t numel() const { return shape_.numel(); }
  std::uint64_t id() const { return id_; }

  std::span<const Scalar> data() const { return {data_->data(), data_->size()}; }
  // Only for filling a freshly created tensor.
  std::span<Scalar> mutable_data() { return {data_->data(), data_->size()}; }

  Scalar item() const {
    if (!shape_.is_scalar()) throw DimensionError("shape", "item() on non-scalar " + shape_.str());
    return (*data_)[0];
  }

  std::int64_t offset(std::int64_t n, std::int64_t c, std::int64_t y, std::int64_t x) const {
    return ((n * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }
  Scalar at(std::int64_t n, std::int64_t c, std::int64_t y, std::int64_t x) const {
    return (*data_)[offset(n, c, y, x)];
  }

  // Deep copy with a fresh identity.
  Tensor clone() const { return Tensor(shape_, *data_); }

 private:
  static std::int64_t checked_numel(const Shape& s) {
    if (s.n < 0 || s.c < 0 || s.h < 0 || s.w < 0) {
      throw DimensionError("shape", "negative extent in " + s.str());
    }
    return s.numel();
  }

  Shape shape_;
  std::shared_ptr<std::vector<Scalar>> data_;
  std::uint64_t id_ = 0;
};

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Debug-build guard for the "finite in, finite out" contract of forward ops.
inline void debug_check_finite([[maybe_unused]] const Tensor& t,
                               [[maybe_unused]] const char* op) {
#ifndef NDEBUG
  for (Scalar v : t.data()) {
    if (!std::isfinite(v)) throw NonFiniteError(std::string(op) + " produced a non-finite value");
  }
#endif
}

inline bool all_finite(std::span<const Scalar> values) {
  for (Scalar v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

inline bool bitwise_equal(const Tensor& a, const Tensor& b) {
  if (!(a.shape() == b.shape())) return false;
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] != y[i]) return false;
  }
  return true;
}

inline Scalar max_abs_diff(const Tensor& a, const Tensor& b) {
  if (!(a.shape() == b.shape())) {
    throw DimensionError("shape", a.shape().str() + " vs " + b.shape().str());
  }
  Scalar m = 0;
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max<Scalar>(m, std::abs(x[i] - y[i]));
  return m;
}

}  // namespace ovsr
