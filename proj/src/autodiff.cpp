#include "seqmark/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "seqmark/error.hpp"

namespace seqmark::ad {

const Tensor& Var::value() const { return tape_->value(id_); }

const Tensor& GradSink::value(std::size_t id) const { return tape_.value(id); }

Tensor& GradSink::grad(std::size_t id) {
  auto& slot = grads_[id];
  if (!slot) slot.emplace(tape_.value(id).shape(), 0.0);
  return *slot;
}

bool Gradients::contains(Var v) const noexcept { return find(v) != nullptr; }

const Tensor* Gradients::find(Var v) const noexcept {
  if (v.id() >= grads_.size() || !grads_[v.id()]) return nullptr;
  return &*grads_[v.id()];
}

const Tensor& Gradients::operator[](Var v) const {
  const Tensor* g = find(v);
  if (!g) throw Error(ErrorCode::invalid_argument, "no gradient for node " + std::to_string(v.id()));
  return *g;
}

Var Tape::leaf(Tensor value) {
  nodes_.push_back(Node{OpKind::leaf, std::move(value), {}, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(OpKind kind, Tensor value, std::vector<std::size_t> inputs, BackwardFn backward) {
#ifndef NDEBUG
  if (!value.all_finite()) {
    bool inputs_finite = true;
    for (auto id : inputs) inputs_finite = inputs_finite && nodes_[id].value.all_finite();
    if (inputs_finite) throw Error(ErrorCode::invalid_argument, "non-finite output from finite inputs");
  }
#endif
  nodes_.push_back(Node{kind, std::move(value), std::move(inputs), std::move(backward)});
  return Var(this, nodes_.size() - 1);
}

Gradients Tape::backward(Var loss) {
  if (&loss.tape() != this) throw Error(ErrorCode::invalid_argument, "loss is not on this tape");
  if (value(loss.id()).size() != 1) {
    throw Error(ErrorCode::shape_mismatch,
                "backward requires a scalar loss, got shape " + to_string(value(loss.id()).shape()));
  }
  std::vector<std::optional<Tensor>> grads(nodes_.size());
  grads[loss.id()].emplace(value(loss.id()).shape(), 1.0);
  GradSink sink(*this, grads);
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    const auto& node = nodes_[i];
    if (!grads[i] || !node.backward) continue;
    node.backward(*grads[i], sink);
  }
  nodes_.clear();
  return Gradients(std::move(grads));
}

std::vector<std::uint8_t> Tape::relu_pattern() const {
  std::vector<std::uint8_t> pattern;
  for (const auto& node : nodes_) {
    if (node.kind != OpKind::relu) continue;
    for (double v : nodes_[node.inputs[0]].value.data()) pattern.push_back(v > 0.0 ? 1 : 0);
  }
  return pattern;
}

namespace {

void require_same_tape(Var a, Var b) {
  if (&a.tape() != &b.tape()) throw Error(ErrorCode::invalid_argument, "operands live on different tapes");
}

void accumulate(Tensor& dst, const Tensor& src, double factor = 1.0) {
  auto d = dst.data();
  auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += factor * s[i];
}

double sum_of(const Tensor& t) {
  double s = 0.0;
  for (double v : t.data()) s += v;
  return s;
}

// Splits a shape around `axis` into outer * n * inner.
struct AxisSplit {
  std::size_t outer = 1, n = 1, inner = 1;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.n = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

void check_axis(const Shape& shape, std::size_t axis) {
  if (axis >= shape.size()) {
    throw Error(ErrorCode::axis_out_of_range,
                "axis " + std::to_string(axis) + " out of range for shape " + to_string(shape));
  }
}

}  // namespace

Var elementwise_binary(BinaryKind kind, Var a, Var b) {
  require_same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const bool a_scalar = av.rank() == 0 && bv.rank() != 0;
  const bool b_scalar = bv.rank() == 0 && av.rank() != 0;
  if (!a_scalar && !b_scalar && !av.same_shape(bv)) {
    throw Error(ErrorCode::shape_mismatch,
                "elementwise op on shapes " + to_string(av.shape()) + " and " + to_string(bv.shape()));
  }
  Tensor out(a_scalar ? bv.shape() : av.shape());
  auto o = out.data();
  auto x = av.data();
  auto y = bv.data();
  for (std::size_t i = 0; i < o.size(); ++i) {
    const double l = a_scalar ? x[0] : x[i];
    const double r = b_scalar ? y[0] : y[i];
    switch (kind) {
      case BinaryKind::add: o[i] = l + r; break;
      case BinaryKind::sub: o[i] = l - r; break;
      case BinaryKind::mul: o[i] = l * r; break;
    }
  }
  const auto ia = a.id();
  const auto ib = b.id();
  const OpKind op = kind == BinaryKind::add ? OpKind::add : kind == BinaryKind::sub ? OpKind::sub : OpKind::mul;
  return a.tape().record(op, std::move(out), {ia, ib}, [=](const Tensor& g, GradSink& s) {
    auto gd = g.data();
    auto side = [&](std::size_t self, std::size_t other, bool self_scalar, bool other_scalar, double sign) {
      Tensor& dst = s.grad(self);
      auto d = dst.data();
      auto ov = s.value(other).data();
      for (std::size_t i = 0; i < gd.size(); ++i) {
        double contrib = gd[i] * sign;
        if (kind == BinaryKind::mul) contrib = gd[i] * (other_scalar ? ov[0] : ov[i]);
        d[self_scalar ? 0 : i] += contrib;
      }
    };
    side(ia, ib, a_scalar, b_scalar, 1.0);
    side(ib, ia, b_scalar, a_scalar, kind == BinaryKind::sub ? -1.0 : 1.0);
  });
}

Var add(Var a, Var b) { return elementwise_binary(BinaryKind::add, a, b); }
Var sub(Var a, Var b) { return elementwise_binary(BinaryKind::sub, a, b); }
Var mul(Var a, Var b) { return elementwise_binary(BinaryKind::mul, a, b); }

Var scale(Var x, double factor) {
  Tensor out = x.value();
  for (double& v : out.data()) v *= factor;
  const auto ix = x.id();
  return x.tape().record(OpKind::scale, std::move(out), {ix},
                         [=](const Tensor& g, GradSink& s) { accumulate(s.grad(ix), g, factor); });
}

double stable_sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Var activation(Activation kind, Var x) {
  Tensor out = x.value();
  switch (kind) {
    case Activation::tanh:
      for (double& v : out.data()) v = std::tanh(v);
      break;
    case Activation::sigmoid:
      for (double& v : out.data()) v = stable_sigmoid(v);
      break;
    case Activation::relu:
      for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
      break;
  }
  const auto ix = x.id();
  const OpKind op = kind == Activation::tanh ? OpKind::tanh : kind == Activation::sigmoid ? OpKind::sigmoid : OpKind::relu;
  Tape& tape = x.tape();
  const std::size_t out_id = tape.size();
  return tape.record(op, std::move(out), {ix}, [=](const Tensor& g, GradSink& s) {
    auto gd = g.data();
    auto d = s.grad(ix).data();
    auto y = s.value(out_id).data();
    switch (kind) {
      case Activation::tanh:
        for (std::size_t i = 0; i < gd.size(); ++i) d[i] += gd[i] * (1.0 - y[i] * y[i]);
        break;
      case Activation::sigmoid:
        for (std::size_t i = 0; i < gd.size(); ++i) d[i] += gd[i] * y[i] * (1.0 - y[i]);
        break;
      case Activation::relu:
        for (std::size_t i = 0; i < gd.size(); ++i) d[i] += y[i] > 0.0 ? gd[i] : 0.0;
        break;
    }
  });
}

Var tanh(Var x) { return activation(Activation::tanh, x); }
Var sigmoid(Var x) { return activation(Activation::sigmoid, x); }
Var relu(Var x) { return activation(Activation::relu, x); }

Var reduce(Reduction kind, Var x, std::optional<std::size_t> axis) {
  const Tensor& xv = x.value();
  const auto ix = x.id();
  const OpKind op = kind == Reduction::sum ? OpKind::sum : OpKind::mean;
  if (!axis) {
    const double n = static_cast<double>(xv.size());
    const double factor = kind == Reduction::mean ? 1.0 / n : 1.0;
    const double total = sum_of(xv) * factor;
    return x.tape().record(op, Tensor::scalar(total), {ix}, [=](const Tensor& g, GradSink& s) {
      const double gv = g[0] * factor;
      for (double& d : s.grad(ix).data()) d += gv;
    });
  }
  check_axis(xv.shape(), *axis);
  const auto sp = split_axis(xv.shape(), *axis);
  Shape out_shape = xv.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(*axis));
  Tensor out(out_shape, 0.0);
  const double factor = kind == Reduction::mean ? 1.0 / static_cast<double>(sp.n) : 1.0;
  auto xd = xv.data();
  auto od = out.data();
  for (std::size_t o = 0; o < sp.outer; ++o) {
    for (std::size_t k = 0; k < sp.n; ++k) {
      const double* src = xd.data() + (o * sp.n + k) * sp.inner;
      double* dst = od.data() + o * sp.inner;
      for (std::size_t i = 0; i < sp.inner; ++i) dst[i] += src[i];
    }
  }
  if (factor != 1.0) {
    for (double& v : od) v *= factor;
  }
  return x.tape().record(op, std::move(out), {ix}, [=](const Tensor& g, GradSink& s) {
    auto d = s.grad(ix).data();
    auto gd = g.data();
    for (std::size_t o = 0; o < sp.outer; ++o) {
      for (std::size_t k = 0; k < sp.n; ++k) {
        double* dst = d.data() + (o * sp.n + k) * sp.inner;
        const double* src = gd.data() + o * sp.inner;
        for (std::size_t i = 0; i < sp.inner; ++i) dst[i] += factor * src[i];
      }
    }
  });
}

Var sum(Var x, std::optional<std::size_t> axis) { return reduce(Reduction::sum, x, axis); }
Var mean(Var x, std::optional<std::size_t> axis) { return reduce(Reduction::mean, x, axis); }

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw Error(ErrorCode::invalid_argument, "concat of zero parts");
  const Shape& first = parts[0].shape();
  check_axis(first, axis);
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const Var& p : parts) {
    require_same_tape(parts[0], p);
    const Shape& sh = p.shape();
    bool ok = sh.size() == first.size();
    for (std::size_t i = 0; ok && i < sh.size(); ++i) ok = i == axis || sh[i] == first[i];
    if (!ok) {
      throw Error(ErrorCode::shape_mismatch, "concat along axis " + std::to_string(axis) + " of incompatible shapes " +
                                                 to_string(first) + " and " + to_string(sh));
    }
    out_shape[axis] += sh[axis];
  }
  const auto osp = split_axis(out_shape, axis);
  Tensor out(out_shape);
  std::vector<std::size_t> ids;
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const auto psp = split_axis(p.shape(), axis);
    auto src = p.value().data();
    auto dst = out.data();
    for (std::size_t o = 0; o < osp.outer; ++o) {
      std::copy_n(src.data() + o * psp.n * psp.inner, psp.n * psp.inner,
                  dst.data() + (o * osp.n + offset) * osp.inner);
    }
    ids.push_back(p.id());
    offsets.push_back(offset);
    offset += psp.n;
  }
  return parts[0].tape().record(OpKind::concat, std::move(out), ids, [=](const Tensor& g, GradSink& s) {
    auto gd = g.data();
    for (std::size_t k = 0; k < ids.size(); ++k) {
      Tensor& dst = s.grad(ids[k]);
      const auto psp = split_axis(dst.shape(), axis);
      auto d = dst.data();
      for (std::size_t o = 0; o < osp.outer; ++o) {
        const double* src = gd.data() + (o * osp.n + offsets[k]) * osp.inner;
        double* to = d.data() + o * psp.n * psp.inner;
        for (std::size_t i = 0; i < psp.n * psp.inner; ++i) to[i] += src[i];
      }
    }
  });
}

Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t end) {
  const Shape& shape = x.shape();
  check_axis(shape, axis);
  if (begin >= end || end > shape[axis]) {
    throw Error(ErrorCode::out_of_range, "slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                                             ") out of range for shape " + to_string(shape));
  }
  const auto sp = split_axis(shape, axis);
  Shape out_shape = shape;
  out_shape[axis] = end - begin;
  const std::size_t len = end - begin;
  Tensor out(out_shape);
  auto src = x.value().data();
  auto dst = out.data();
  for (std::size_t o = 0; o < sp.outer; ++o) {
    std::copy_n(src.data() + (o * sp.n + begin) * sp.inner, len * sp.inner, dst.data() + o * len * sp.inner);
  }
  const auto ix = x.id();
  return x.tape().record(OpKind::slice, std::move(out), {ix}, [=](const Tensor& g, GradSink& s) {
    auto d = s.grad(ix).data();
    auto gd = g.data();
    for (std::size_t o = 0; o < sp.outer; ++o) {
      double* to = d.data() + (o * sp.n + begin) * sp.inner;
      const double* from = gd.data() + o * len * sp.inner;
      for (std::size_t i = 0; i < len * sp.inner; ++i) to[i] += from[i];
    }
  });
}

Var pad(Var x, std::size_t axis, std::size_t before, std::size_t after) {
  const Shape& shape = x.shape();
  check_axis(shape, axis);
  const auto sp = split_axis(shape, axis);
  Shape out_shape = shape;
  out_shape[axis] += before + after;
  const std::size_t n_out = out_shape[axis];
  Tensor out(out_shape, 0.0);
  auto src = x.value().data();
  auto dst = out.data();
  for (std::size_t o = 0; o < sp.outer; ++o) {
    std::copy_n(src.data() + o * sp.n * sp.inner, sp.n * sp.inner, dst.data() + (o * n_out + before) * sp.inner);
  }
  const auto ix = x.id();
  return x.tape().record(OpKind::pad, std::move(out), {ix}, [=](const Tensor& g, GradSink& s) {
    auto d = s.grad(ix).data();
    auto gd = g.data();
    for (std::size_t o = 0; o < sp.outer; ++o) {
      const double* from = gd.data() + (o * n_out + before) * sp.inner;
      double* to = d.data() + o * sp.n * sp.inner;
      for (std::size_t i = 0; i < sp.n * sp.inner; ++i) to[i] += from[i];
    }
  });
}

Var reshape(Var x, Shape shape) {
  if (shape_size(shape) != x.value().size()) {
    throw Error(ErrorCode::shape_mismatch,
                "cannot reshape " + to_string(x.shape()) + " to " + to_string(shape));
  }
  Tensor out(std::move(shape), x.value().values());
  const auto ix = x.id();
  return x.tape().record(OpKind::reshape, std::move(out), {ix},
                         [=](const Tensor& g, GradSink& s) { accumulate(s.grad(ix), g); });
}

Tensor finite_difference_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorCode::invalid_argument, "finite-difference step must be positive");
  Tensor grad(x.shape(), 0.0);
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    probe[i] = orig + eps;
    const double up = f(probe);
    probe[i] = orig - eps;
    const double down = f(probe);
    probe[i] = orig;
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

double relative_error(double a, double b, double floor) noexcept {
  const double denom = std::max({std::fabs(a), std::fabs(b), floor});
  return std::fabs(a - b) / denom;
}

}  // namespace seqmark::ad
