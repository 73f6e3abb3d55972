#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "graf/error.hpp"

namespace graf {

struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;
  bool operator==(const Shape&) const = default;
};

inline std::string to_string(Shape s) {
  return "[" + std::to_string(s.rows) + "x" + std::to_string(s.cols) + "]";
}

/// Dense row-major matrix of doubles. Scalars are 1x1, vectors are nx1.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_) {
      throw ShapeError("tensor of shape " + to_string(shape()) + " given " +
                       std::to_string(values_.size()) + " values");
    }
  }

  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> v;
    v.reserve(r * c);
    for (const auto& row : rows) {
      if (row.size() != c) throw ShapeError("ragged initializer for tensor");
      v.insert(v.end(), row.begin(), row.end());
    }
    return Tensor(r, c, std::move(v));
  }

  static Tensor scalar(double x) { return Tensor(1, 1, x); }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }
  Shape shape() const noexcept { return {rows_, cols_}; }
  bool empty() const noexcept { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }

  void fill(double x) { std::fill(values_.begin(), values_.end(), x); }

  bool operator==(const Tensor&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// A trainable tensor. It lives outside any tape; a tape refers to it through
/// Tape::watch and writes the accumulated gradient back on backward.
struct Parameter {
  std::string name;
  Tensor value;
  std::optional<Tensor> grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)) {}
};

class Tape;

/// Handle to a value recorded on a tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  Shape shape() const { return value().shape(); }
  bool requires_grad() const;
  Tape& tape() const {
    if (tape_ == nullptr) throw UsageError("variable is not bound to a tape");
    return *tape_;
  }
  std::size_t id() const noexcept { return id_; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Records operations in insertion order and replays them backwards once.
/// Not thread-safe; use one tape per training run.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  Var constant(Tensor value) { return push(std::move(value), false, nullptr, nullptr); }

  /// Untracked leaf that refers to `value` without copying; `value` must
  /// outlive the tape.
  Var view(const Tensor& value) {
    Var v = push(Tensor(), false, nullptr, nullptr);
    nodes_.back().external = &value;
    return v;
  }

  /// Tracked leaf backed by a parameter. The parameter must not be modified
  /// or destroyed before backward() returns.
  Var watch(Parameter& p) {
    Var v = push(Tensor(), true, nullptr, &p);
    nodes_.back().external = &p.value;
    return v;
  }

  /// Used by operators. `fn` is stored only when the result requires a gradient.
  Var record(Tensor value, bool requires_grad, BackwardFn fn) {
    return push(std::move(value), requires_grad, requires_grad ? std::move(fn) : nullptr, nullptr);
  }

  const Tensor& value(std::size_t id) const {
    const Node& n = nodes_.at(id);
    return n.external != nullptr ? *n.external : n.value;
  }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }

  /// Gradient buffer of node `id`, allocated as zeros on first touch.
  Tensor& grad(std::size_t id) {
    Node& n = nodes_.at(id);
    if (!n.has_grad) {
      const Tensor& v = n.external != nullptr ? *n.external : n.value;
      n.grad = Tensor(v.rows(), v.cols(), 0.0);
      n.has_grad = true;
    }
    return n.grad;
  }

  /// Gradient after backward() for nodes whose buffer was retained.
  std::optional<Tensor> grad_of(const Var& v) const {
    const Node& n = nodes_.at(check(v));
    if (!n.has_grad) return std::nullopt;
    return n.grad;
  }

  std::size_t size() const noexcept { return nodes_.size(); }

  /// Reverse pass from a scalar. Watched parameters receive their gradient;
  /// parameters not reachable from `loss` receive zeros. Intermediate buffers
  /// are released as soon as they have been propagated unless `retain` is set.
  void backward(const Var& loss, bool retain = false) {
    const std::size_t root = check(loss);
    if (value(root).shape() != Shape{1, 1}) {
      throw ShapeError("backward needs a scalar loss, got " + to_string(value(root).shape()));
    }
    if (backward_done_) throw UsageError("backward already ran on this tape");
    backward_done_ = true;

    for (Node& n : nodes_) {
      if (n.param != nullptr) n.param->grad = Tensor(n.param->value.rows(), n.param->value.cols(), 0.0);
    }
    if (!nodes_[root].requires_grad) return;
    grad(root)[0] = 1.0;

    for (std::size_t id = root + 1; id-- > 0;) {
      Node& n = nodes_[id];
      if (!n.has_grad) continue;
      if (n.backward) n.backward(*this, id);
      if (n.param != nullptr) {
        auto dst = n.param->grad->values();
        const auto src = n.grad.values();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
      }
      if (!retain && id != root && n.param == nullptr) {
        n.grad = Tensor();
        n.has_grad = false;
      }
    }
  }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    BackwardFn backward;
    Parameter* param = nullptr;
    const Tensor* external = nullptr;
  };

  Var push(Tensor value, bool requires_grad, BackwardFn fn, Parameter* param) {
    nodes_.push_back(Node{std::move(value), Tensor(), false, requires_grad, std::move(fn), param, nullptr});
    return Var(this, nodes_.size() - 1);
  }

  std::size_t check(const Var& v) const {
    if (&v.tape() != this) throw UsageError("variable belongs to a different tape");
    return v.id();
  }

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

inline const Tensor& Var::value() const { return tape().value(id_); }
inline bool Var::requires_grad() const { return tape().requires_grad(id_); }

}  // namespace graf
