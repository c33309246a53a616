#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "seqmark/autodiff.hpp"
#include "seqmark/layers.hpp"
#include "seqmark/marker_net.hpp"
#include "seqmark/random.hpp"
#include "seqmark/supervision.hpp"
#include "seqmark/tensor.hpp"

namespace seqmark::testing {

inline Tensor random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(shape);
  for (auto& v : t.data()) v = uniform(rng, lo, hi);
  return t;
}

/// Builds the op under test on `tape` from leaf inputs.
using OpBuilder = std::function<ad::Var(ad::Tape&, std::span<const ad::Var>)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // elements whose +-eps evaluations straddle a relu kink
};

/// Compares backward() against central differences of L = sum(op(inputs) * R),
/// R a fixed random weighting, for every element of every input.
inline GradCheckResult check_gradients(const OpBuilder& op, const std::vector<Tensor>& inputs, Rng& rng,
                                       double eps = 1e-5) {
  Tensor weights;
  bool drawn = false;
  auto loss_and_pattern = [&](const std::vector<Tensor>& xs, std::vector<std::uint8_t>* pattern) {
    ad::Tape tape;
    std::vector<ad::Var> leaves;
    for (const auto& x : xs) leaves.push_back(tape.leaf(x));
    const ad::Var out = op(tape, leaves);
    if (!drawn) {
      weights = random_tensor(out.shape(), rng);
      drawn = true;
    }
    if (pattern) *pattern = tape.relu_pattern();
    double loss = 0.0;
    const auto od = out.value().data();
    for (std::size_t i = 0; i < od.size(); ++i) loss += od[i] * weights[i];
    return loss;
  };
  loss_and_pattern(inputs, nullptr);  // draws the weighting

  ad::Tape tape;
  std::vector<ad::Var> leaves;
  for (const auto& x : inputs) leaves.push_back(tape.leaf(x));
  const ad::Var out = op(tape, leaves);
  const ad::Var loss = ad::sum(ad::mul(out, tape.leaf(weights)));
  const ad::Gradients grads = tape.backward(loss);

  GradCheckResult result;
  std::vector<Tensor> xs = inputs;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const Tensor* analytic = grads.find(leaves[i]);
    for (std::size_t j = 0; j < xs[i].size(); ++j) {
      const double saved = xs[i][j];
      std::vector<std::uint8_t> up_pattern, down_pattern;
      xs[i][j] = saved + eps;
      const double up = loss_and_pattern(xs, &up_pattern);
      xs[i][j] = saved - eps;
      const double down = loss_and_pattern(xs, &down_pattern);
      xs[i][j] = saved;
      if (up_pattern != down_pattern) {
        ++result.skipped;
        continue;
      }
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic ? (*analytic)[j] : 0.0;
      result.max_rel_error = std::max(result.max_rel_error, ad::relative_error(a, numeric));
      ++result.checked;
    }
  }
  return result;
}

/// Gradient of mean BCE w.r.t. every parameter and the input of `net`, checked
/// against central differences. Dropout masks repeat across evaluations because
/// each pass reseeds from `dropout_seed`.
inline GradCheckResult check_net_gradients(MarkerNet& net, const Tensor& x, const std::vector<double>& y,
                                           nn::Mode mode, std::uint64_t dropout_seed, double eps = 1e-5) {
  auto evaluate = [&](const Tensor& input, std::vector<std::uint8_t>* pattern) {
    ad::Tape tape;
    Rng rng(dropout_seed);
    nn::ForwardContext ctx(tape, mode, &rng);
    const ad::Var loss = bce_loss(net.forward(ctx, tape.leaf(input)), y);
    if (pattern) *pattern = tape.relu_pattern();
    return loss.value().item();
  };

  ad::Tape tape;
  Rng rng(dropout_seed);
  nn::ForwardContext ctx(tape, mode, &rng);
  const ad::Var input = tape.leaf(x);
  const ad::Var loss = bce_loss(net.forward(ctx, input), y);
  std::vector<std::pair<Tensor*, const ad::Var*>> slots;
  for (auto& [name, t] : net.parameters()) slots.emplace_back(t, ctx.bound(*t));
  const ad::Gradients grads = tape.backward(loss);

  GradCheckResult result;
  auto compare = [&](double analytic, double up, double down, const std::vector<std::uint8_t>& pu,
                     const std::vector<std::uint8_t>& pd) {
    if (pu != pd) {
      ++result.skipped;
      return;
    }
    result.max_rel_error = std::max(result.max_rel_error, ad::relative_error(analytic, (up - down) / (2.0 * eps)));
    ++result.checked;
  };
  std::vector<std::uint8_t> pu, pd;
  for (auto& [tensor, var] : slots) {
    const Tensor* g = var ? grads.find(*var) : nullptr;
    for (std::size_t j = 0; j < tensor->size(); ++j) {
      const double saved = (*tensor)[j];
      (*tensor)[j] = saved + eps;
      const double up = evaluate(x, &pu);
      (*tensor)[j] = saved - eps;
      const double down = evaluate(x, &pd);
      (*tensor)[j] = saved;
      compare(g ? (*g)[j] : 0.0, up, down, pu, pd);
    }
  }
  const Tensor& gx = grads[input];
  Tensor xs = x;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    xs[j] = x[j] + eps;
    const double up = evaluate(xs, &pu);
    xs[j] = x[j] - eps;
    const double down = evaluate(xs, &pd);
    xs[j] = x[j];
    compare(gx[j], up, down, pu, pd);
  }
  return result;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("seqmark-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace seqmark::testing
