#pragma once

// Tape-based reverse-mode differentiation over dense tensors.
//
// A Tape owns every intermediate value. Ops append nodes in execution order,
// so node ids are already a topological order and backward() is a single
// reverse sweep. A Tape is not thread-safe; use one tape per context.

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mdn/tensor.hpp"

namespace mdn {

class Tape;

class Var {
 public:
  Var() = default;

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// What a node's backward rule sees. input_grad(i) is null when input i does
// not need a gradient; rules must skip those.
class BackwardContext {
 public:
  const Tensor& out_value() const;
  const Tensor& out_grad() const;
  const Tensor& input_value(std::size_t i) const;
  Tensor* input_grad(std::size_t i) const;
  std::size_t input_count() const;

 private:
  friend class Tape;
  BackwardContext(Tape& tape, std::size_t node) : tape_(tape), node_(node) {}
  Tape& tape_;
  std::size_t node_;
};

using BackwardFn = std::function<void(const BackwardContext&)>;

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Differentiable input.
  Var leaf(Tensor value);
  // Input that never receives a gradient.
  Var constant(Tensor value);

  // Appends an op result. Throws NumericError if value has NaN/Inf.
  Var record(std::string_view op, Tensor value, std::span<const Var> inputs, BackwardFn backward);
  Var record(std::string_view op, Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
    return record(op, std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(backward));
  }

  const Tensor& value(Var v) const { return nodes_.at(v.id()).value; }
  // Gradient after backward(). Leaves not reached hold zeros.
  const Tensor& grad(Var v) const;
  bool requires_grad(Var v) const { return nodes_.at(v.id()).requires_grad; }
  const std::string& op_name(Var v) const { return nodes_.at(v.id()).op; }

  // Reverse sweep from a single-element output.
  void backward(Var output);

  std::size_t size() const { return nodes_.size(); }
  // Node ids in the order the last backward() visited them.
  const std::vector<std::size_t>& visit_log() const { return visit_log_; }

 private:
  friend class BackwardContext;

  struct Node {
    std::string op;
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    bool is_leaf = false;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
  };

  Tensor* grad_buffer(std::size_t id);
  void check_owned(Var v, std::string_view op) const;

  std::deque<Node> nodes_;
  std::vector<std::size_t> visit_log_;
};

// Primitive ops. Shape rules are strict: elementwise ops need equal shapes,
// except the scalar-tensor variants and add_channel_bias.
namespace ad {

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var add_scalar(Var a, double value);
// x: [C, ...], bias: [C]
Var add_channel_bias(Var x, Var bias);

Var neg(Var a);
Var exp(Var a);
Var log(Var a);
Var abs(Var a);
Var square(Var a);
Var relu(Var a);
// Unit-coefficient ELU: x for x >= 0, exp(x) - 1 otherwise.
Var elu(Var a);
Var sigmoid(Var a);

// a: [m, k], b: [k, n]
Var matmul(Var a, Var b);
// x: [Cin, H, W], weight: [Cout, Cin, kh, kw], bias: [Cout] or invalid Var.
Var conv2d(Var x, Var weight, Var bias, std::size_t stride, std::size_t padding);

Var softmax(Var a, std::size_t axis);
// Reduces `axis`; max-shifted so large magnitudes do not overflow.
Var log_sum_exp(Var a, std::size_t axis);

// x: [C, H, W], mask: [H, W] with entries 0 or 1. Result [C, P] with P the
// number of set cells in row-major order.
Var masked_gather(Var x, const Tensor& mask);
// Channel block [begin, begin + count) along axis 0.
Var slice_channels(Var x, std::size_t begin, std::size_t count);
Var reshape(Var a, Shape shape);

Var sum(Var a);
Var mean(Var a);

}  // namespace ad
}  // namespace mdn
