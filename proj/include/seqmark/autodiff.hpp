#pragma once

// Tape-based reverse-mode differentiation over dense f64 tensors.
//
// A Tape records every operation applied to Vars created from it. backward()
// walks the tape once in reverse and returns the gradient of a scalar loss with
// respect to every recorded node. The node list is append-only, so recording
// order is a topological order by construction.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "seqmark/tensor.hpp"

namespace seqmark::ad {

enum class OpKind : std::uint8_t {
  leaf,
  add,
  sub,
  mul,
  scale,
  tanh,
  sigmoid,
  relu,
  sum,
  mean,
  concat,
  slice,
  pad,
  reshape,
  conv1d,
  avg_pool,
  upsample,
  layer_norm,
  dropout,
  bce,
};

class Tape;

/// Handle to a node on a Tape. Cheap to copy; only valid while the tape holds the node.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t id() const noexcept { return id_; }
  Tape& tape() const noexcept { return *tape_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// View handed to backward closures: read forward values, accumulate input gradients.
class GradSink {
 public:
  const Tensor& value(std::size_t id) const;
  /// Gradient buffer for node `id`, zero-filled on first access.
  Tensor& grad(std::size_t id);

 private:
  friend class Tape;
  GradSink(const Tape& tape, std::vector<std::optional<Tensor>>& grads) : tape_(tape), grads_(grads) {}

  const Tape& tape_;
  std::vector<std::optional<Tensor>>& grads_;
};

using BackwardFn = std::function<void(const Tensor& out_grad, GradSink& sink)>;

/// Result of Tape::backward, keyed by the Vars that were on the tape.
class Gradients {
 public:
  bool contains(Var v) const noexcept;
  const Tensor* find(Var v) const noexcept;
  /// Throws if `v` was not reachable from the loss.
  const Tensor& operator[](Var v) const;

 private:
  friend class Tape;
  explicit Gradients(std::vector<std::optional<Tensor>> grads) : grads_(std::move(grads)) {}

  std::vector<std::optional<Tensor>> grads_;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value);
  Var record(OpKind kind, Tensor value, std::vector<std::size_t> inputs, BackwardFn backward);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  OpKind kind(std::size_t id) const { return nodes_[id].kind; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Reverse sweep from a scalar loss. The tape is cleared afterwards.
  Gradients backward(Var loss);
  void clear() noexcept { nodes_.clear(); }

  /// One byte per relu input element (1 where the input is positive), in tape
  /// order. Two evaluations with different patterns straddle a kink.
  std::vector<std::uint8_t> relu_pattern() const;

 private:
  struct Node {
    OpKind kind;
    Tensor value;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
};

enum class BinaryKind { add, sub, mul };
enum class Activation { tanh, sigmoid, relu };
enum class Reduction { sum, mean };

/// Same-shape elementwise op; a rank-0 operand broadcasts against the other.
Var elementwise_binary(BinaryKind kind, Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var x, double factor);

Var activation(Activation kind, Var x);
Var tanh(Var x);
Var sigmoid(Var x);
Var relu(Var x);

/// Full reduction to a scalar when `axis` is empty, otherwise drops `axis`.
Var reduce(Reduction kind, Var x, std::optional<std::size_t> axis = std::nullopt);
Var sum(Var x, std::optional<std::size_t> axis = std::nullopt);
Var mean(Var x, std::optional<std::size_t> axis = std::nullopt);

Var concat(std::span<const Var> parts, std::size_t axis);
Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t end);
/// Zero padding along `axis`.
Var pad(Var x, std::size_t axis, std::size_t before, std::size_t after);
Var reshape(Var x, Shape shape);

/// Numerically stable logistic function on a plain value.
double stable_sigmoid(double x) noexcept;

/// Central differences (f(x + eps e_i) - f(x - eps e_i)) / (2 eps), one element at a time.
Tensor finite_difference_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x,
                                  double eps = 1e-5);

/// |a - b| / max(|a|, |b|, floor).
double relative_error(double a, double b, double floor = 1e-4) noexcept;

}  // namespace seqmark::ad
